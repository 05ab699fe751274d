//! Discrete calculus on the window: difference quotients, the discrete
//! energy norm `X_ε`, its dual norm, and the continuum norm `X₀` of
//! piecewise-linear interpolants.

use crate::atomistic::{AtomisticModel, DofMap, Parts};
use crate::banded::{dot, norm, BandCholesky, BandMatrix};
use crate::geometry::{Layer, Species, Sublattice};
use crate::interp::{square_integral, Interpolant};
use crate::lattice::{Triangulation, TruncatedLattice};
use crate::material::ElasticConstants;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffVariant {
    /// `s` within the same sublattice.
    Plain,
    /// From an A site to the B site at `s + p`.
    PlusP,
    /// From a B site to the A site at `s − p`.
    MinusP,
}

/// Difference quotient `(f(x + ε s') − f(x)) / ε` in rescaled units, with
/// `s'` = `s`, `s + p` or `s − p`. `None` where the neighbour is outside the
/// window or the variant does not apply to the atom's sublattice.
pub fn diff(lat: &TruncatedLattice, f: &[f64], s: (i64, i64), variant: DiffVariant, eps: f64) -> Vec<Option<f64>> {
    lat.atoms()
        .iter()
        .enumerate()
        .map(|(id, at)| {
            let sp = at.index.species;
            let target = match (variant, sp.sublattice) {
                (DiffVariant::Plain, _) => sp,
                (DiffVariant::PlusP, Sublattice::A) => sp.with_sublattice(Sublattice::B),
                (DiffVariant::MinusP, Sublattice::B) => sp.with_sublattice(Sublattice::A),
                _ => return None,
            };
            let (i, j) = at.index.cell;
            // A(i, j) + p = B(i, j), so every variant shifts the cell by s.
            lat.lookup(target, i + s.0, j + s.1).map(|nb| (f[nb] - f[id]) / eps)
        })
        .collect()
}

/// Upper/lower pairs `(a, b)` of the same cell and sublattice, whose
/// difference is the index-wise disregistry `f⊥`.
pub fn perp_pairs(lat: &TruncatedLattice) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (id, at) in lat.atoms().iter().enumerate() {
        let sp = at.index.species;
        if sp.layer != Layer::Upper {
            continue;
        }
        let (i, j) = at.index.cell;
        if let Some(b) = lat.lookup(Species::new(Layer::Lower, sp.sublattice), i, j) {
            out.push((id, b));
        }
    }
    out
}

/// Squared `X_ε` norm of a full atom vector `f`:
/// `fᵀ H_el(0) f + ε² Σ (f⊥)²`, scaled by the model's norm factor.
pub fn xeps_norm_sq(model: &AtomisticModel, f: &[f64]) -> Result<f64> {
    let zero = vec![0.0; f.len()];
    let hf = model.hessian_apply_raw(&zero, f, Parts::ELASTIC)?;
    let perp: f64 = perp_pairs(&model.lattice).iter().map(|&(a, b)| (f[a] - f[b]).powi(2)).sum();
    Ok(model.norm_factor() * (dot(f, &hf) + model.eps * model.eps * perp))
}

/// Gram matrix of `X_ε` on a reduced dof space, with its factorisation.
#[derive(Debug, Clone)]
pub struct XEpsGram {
    pub gram: BandMatrix,
    chol: BandCholesky,
}

#[derive(Debug, Clone)]
pub struct DualNorm {
    pub value: f64,
    /// Riesz representative in reduced coordinates.
    pub riesz: Vec<f64>,
    /// Relative residual `‖G r − g‖ / ‖g‖`.
    pub residual: f64,
}

impl XEpsGram {
    pub fn new(model: &AtomisticModel, map: &DofMap) -> Result<Self> {
        let zero = vec![0.0; model.n_atoms()];
        let mut gram = crate::atomistic::hessian_band(model, map, &zero, Parts::ELASTIC)?;
        let k = model.norm_factor() * model.eps * model.eps;
        for (a, b) in perp_pairs(&model.lattice) {
            let (da, db) = (map.dof(a), map.dof(b));
            let mut add = |x: Option<(usize, f64)>, y: Option<(usize, f64)>, v: f64| -> Result<()> {
                if let (Some((i, si)), Some((j, sj))) = (x, y) {
                    if i >= j {
                        gram.add(i, j, si * sj * v)?;
                    }
                }
                Ok(())
            };
            add(da, da, k)?;
            add(db, db, k)?;
            add(da, db, -k)?;
            add(db, da, -k)?;
        }
        let chol = gram.cholesky()?;
        Ok(Self { gram, chol })
    }

    pub fn norm_sq(&self, q: &[f64]) -> f64 {
        self.gram.quadratic_form(q)
    }

    pub fn cholesky(&self) -> &BandCholesky {
        &self.chol
    }

    /// Dual norm of a reduced linear functional `g` (e.g. a reduced
    /// gradient) via the Riesz system `G r = g`, with one step of
    /// iterative refinement.
    pub fn dual_norm(&self, g: &[f64]) -> DualNorm {
        let mut r = self.chol.solve(g);
        let res: Vec<f64> = g.iter().zip(self.gram.matvec(&r)).map(|(a, b)| a - b).collect();
        let corr = self.chol.solve(&res);
        r.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
        let res: Vec<f64> = g.iter().zip(self.gram.matvec(&r)).map(|(a, b)| a - b).collect();
        let gn = norm(g);
        DualNorm {
            value: dot(g, &r).max(0.0).sqrt(),
            residual: if gn > 0.0 { norm(&res) / gn } else { 0.0 },
            riesz: r,
        }
    }
}

/// Parts of the squared `X₀` norm of an interpolated pair of layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct X0Norm {
    pub elastic: f64,
    pub perp: f64,
}

impl X0Norm {
    pub fn total(&self) -> f64 {
        self.elastic + self.perp
    }
}

/// Weight of the disregistry term in `X₀`.
pub const PERP_WEIGHT: f64 = 4.0 / crate::geometry::SQRT3;

/// `X₀` norm of the piecewise-linear interpolants of a full atom vector:
/// `2α1‖∂ₓf±‖² + 2α2‖∂ᵧf±‖² + (4/√3)‖f⊥‖²`, y-averaged over the window in
/// rescaled units. The disregistry `f⊥` is formed index-wise on the upper
/// layer and interpolated on `upper`.
pub fn x0_norm_interpolated(
    lat: &TruncatedLattice,
    ec: &ElasticConstants,
    eps: f64,
    f: &[f64],
    upper: &Triangulation,
    lower: &Triangulation,
) -> Result<X0Norm> {
    if upper.layer != Layer::Upper || lower.layer != Layer::Lower {
        return Err(Error::InvalidParameter("triangulations must be (upper, lower)".into()));
    }
    let k = 1.0 / (lat.n_y as f64 * crate::geometry::SQRT3 * eps);
    let mut elastic = 0.0;
    for tri in [upper, lower] {
        let ip = Interpolant::new(tri, f);
        for (t, tr) in tri.triangles.iter().enumerate() {
            let g = ip.gradient(t);
            elastic += tr.area() * (2.0 * ec.alpha1 * g.x * g.x + 2.0 * ec.alpha2 * g.y * g.y);
        }
    }
    let mut perp_vals = vec![0.0; f.len()];
    for (a, b) in perp_pairs(lat) {
        perp_vals[a] = f[a] - f[b];
    }
    let mut perp = 0.0;
    for tr in &upper.triangles {
        if tr.vertices.iter().any(|&v| perp_partner_missing(lat, v)) {
            continue;
        }
        perp += square_integral(tr, tr.vertices.map(|v| perp_vals[v]));
    }
    Ok(X0Norm {
        elastic: k * elastic,
        perp: k * eps * eps * PERP_WEIGHT * perp,
    })
}

fn perp_partner_missing(lat: &TruncatedLattice, a: usize) -> bool {
    let at = &lat.atoms()[a];
    let (i, j) = at.index.cell;
    lat.lookup(Species::new(Layer::Lower, at.index.species.sublattice), i, j).is_none()
}
