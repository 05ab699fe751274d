//! Stability spectra: the smallest eigenvalue of the reduced atomistic
//! Hessian, the PN stability constants ϑ and ϑ̄, and the interpolation gaps
//! Δ_A, Δ_B at the perfect lattice.

use serde::{Deserialize, Serialize};

use crate::atomistic::{hessian_band, AtomisticModel, Constraint, DofMap, Parts, ReducedProblem};
use crate::banded::{dot, norm, BandMatrix};
use crate::geometry::{Layer, Sublattice};
use crate::interp::gradient_weights;
use crate::lanczos::{extremal, EigenEstimate, Which};
use crate::material::{ElasticConstants, GammaSurface, MisfitPart};
use crate::norms::{XEpsGram, PERP_WEIGHT};
use crate::pn::{gauss_legendre_5, Misfit1D, PnProfile, SlipLine};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Relative Ritz residual at termination.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 400,
            seed: 7,
        }
    }
}

/// An eigenvalue with the diagnostics of the iteration that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Relative residual `‖A x − λ B x‖ / (|λ| ‖B x‖)` of the returned pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of a symmetric band matrix by shift-invert
/// Lanczos. If the matrix is indefinite a negative shift is found first.
pub fn smallest_eigenvalue(h: &BandMatrix, opts: &EigenOptions) -> Result<(Estimate, Vec<f64>)> {
    let n = h.n();
    let scale = h.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    let chol = loop {
        let mut hs = h.clone();
        hs.add_diagonal(-shift);
        match hs.cholesky() {
            Ok(c) => break c,
            Err(_) => {
                shift = if shift == 0.0 { -1e-6 * scale } else { 4.0 * shift };
                if shift < -1e3 * scale {
                    return Err(Error::NoConvergence {
                        solver: "shift search",
                        iterations: 0,
                        residual: f64::NAN,
                    });
                }
            }
        }
    };
    let est = extremal(|v: &[f64]| chol.solve(v), n, Which::Largest, opts.tol, opts.max_iter, opts.seed)?;
    let lambda = shift + 1.0 / est.value;
    let x = est.vector;
    let hx = h.matvec(&x);
    let r: Vec<f64> = hx.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
    Ok((
        Estimate {
            value: lambda,
            residual: norm(&r) / (lambda.abs() * norm(&x)).max(f64::MIN_POSITIVE),
            iterations: est.iterations,
        },
        x,
    ))
}

/// Smallest eigenvalue of the pencil `A x = λ B x` with `B` positive
/// definite, by Lanczos on `L⁻¹ A L⁻ᵀ`.
pub fn generalized_smallest(a: &BandMatrix, b: &BandMatrix, opts: &EigenOptions) -> Result<(Estimate, Vec<f64>)> {
    let chol = b.cholesky()?;
    let apply = |v: &[f64]| chol.forward(&a.matvec(&chol.backward(v)));
    let est: EigenEstimate = extremal(apply, a.n(), Which::Smallest, opts.tol, opts.max_iter, opts.seed)?;
    let x = chol.backward(&est.vector);
    let (ax, bx) = (a.matvec(&x), b.matvec(&x));
    let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - est.value * q).collect();
    Ok((
        Estimate {
            value: est.value,
            residual: norm(&r) / (est.value.abs() * norm(&bx)).max(f64::MIN_POSITIVE),
            iterations: est.iterations,
        },
        x,
    ))
}

/// Smallest eigenvalue of the reduced Hessian at `q`.
pub fn lambda_min(problem: &ReducedProblem, q: &[f64], opts: &EigenOptions) -> Result<Estimate> {
    let h = problem.hessian(q)?;
    Ok(smallest_eigenvalue(&h, opts)?.0)
}

/// Discretisation of the one-dimensional PN second variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighOptions {
    /// Half-length of the domain in units of the core width `1/κ`.
    pub extent: f64,
    pub elements: usize,
    pub eigen: EigenOptions,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        Self {
            extent: 40.0,
            elements: 4000,
            eigen: EigenOptions::default(),
        }
    }
}

/// Stiffness `∫ f'g'`, mass `∫ f g` and weighted mass `∫ w f g` of P1
/// elements on the uniform grid of `[0, X]`, restricted to the interior
/// nodes.
fn p1_matrices(x_end: f64, n: usize, weight: impl Fn(f64) -> f64) -> (BandMatrix, BandMatrix, BandMatrix) {
    let h = x_end / n as f64;
    let m = n - 1;
    let (mut s, mut mass, mut wm) = (BandMatrix::zeros(m, 1), BandMatrix::zeros(m, 1), BandMatrix::zeros(m, 1));
    let (nodes, weights) = gauss_legendre_5();
    for e in 0..n {
        let x0 = e as f64 * h;
        // Local nodes e and e+1 are dofs e−1 and e.
        let ids = [e.checked_sub(1), if e + 1 < n { Some(e) } else { None }];
        let mut kw = [[0.0; 2]; 2];
        for (t, w) in nodes.iter().zip(&weights) {
            let xi = 0.5 * (t + 1.0);
            let phi = [1.0 - xi, xi];
            let g = 0.5 * h * w * weight(x0 + xi * h);
            for p in 0..2 {
                for q in 0..2 {
                    kw[p][q] += g * phi[p] * phi[q];
                }
            }
        }
        let ks = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        let km = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for p in 0..2 {
            for q in 0..2 {
                if let (Some(i), Some(j)) = (ids[p], ids[q]) {
                    if i >= j {
                        // Indices differ by at most one, always in band.
                        let _ = s.add(i, j, ks[p][q]);
                        let _ = mass.add(i, j, km[p][q]);
                        let _ = wm.add(i, j, kw[p][q]);
                    }
                }
            }
        }
    }
    (s, mass, wm)
}

/// Infimum over odd y-independent perturbations of
/// `⟨δ²E f, f⟩₀ / ‖f‖²_{X₀}`, where the elastic part of `δ²E` carries the
/// factor `elastic` (1 for the full energy, ½ for one sublattice part) and
/// the misfit part is `misfit''(φ)`.
///
/// With `s = f⁺ + f⁻`, `d = f⁺ − f⁻` the quotient splits: the `s` block is
/// exactly `elastic`, the `d` block is the pencil
/// `(elastic α1 S + M_{γ''}, α1 S + (4/√3) M)`.
pub fn pn_rayleigh(profile: &PnProfile, misfit: &dyn Misfit1D, elastic: f64, opts: &RayleighOptions) -> Result<Estimate> {
    if opts.elements < 4 || !(opts.extent > 0.0) {
        return Err(Error::InvalidParameter("Rayleigh discretisation too coarse".into()));
    }
    let x_end = opts.extent / profile.kappa;
    let (s, m, wm) = p1_matrices(x_end, opts.elements, |x| misfit.gamma(profile.phi(x)).2);
    let a1 = profile.alpha1;
    let mut a = s.clone();
    a.scale(elastic * a1);
    a.axpy(1.0, &wm)?;
    let mut b = s;
    b.scale(a1);
    b.axpy(PERP_WEIGHT, &m)?;
    let (est, _) = generalized_smallest(&a, &b, &opts.eigen)?;
    if est.value < elastic {
        Ok(est)
    } else {
        Ok(Estimate {
            value: elastic,
            residual: 0.0,
            iterations: est.iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnStability {
    pub theta: Estimate,
    pub theta_a: Estimate,
    pub theta_b: Estimate,
}

impl PnStability {
    pub fn theta_bar(&self) -> f64 {
        self.theta_a.value.min(self.theta_b.value)
    }
}

/// ϑ from the full γ and ϑ̄ from the sublattice parts `γ_A`, `γ_B` (each
/// with half the elastic energy). `surface` is the γ-surface the profile
/// was solved with.
pub fn pn_stability(profile: &PnProfile, surface: &GammaSurface, opts: &RayleighOptions) -> Result<PnStability> {
    let part = |part| SlipLine { surface, part };
    Ok(PnStability {
        theta: pn_rayleigh(profile, &SlipLine::new(surface), 1.0, opts)?,
        theta_a: pn_rayleigh(profile, &part(MisfitPart::A), 0.5, opts)?,
        theta_b: pn_rayleigh(profile, &part(MisfitPart::B), 0.5, opts)?,
    })
}

/// Band form of `R = δ²E_a^S[0] − δ²E_PN^S[0]∘interp_S` on the dofs of
/// `map`, for the three-body terms centred on sublattice `sub` and the
/// piecewise-linear interpolant on the base-`sub` triangulations of both
/// layers. `R(f) < 0` where the continuum form of the interpolant exceeds
/// the atomistic one.
pub fn interpolation_gap_form(model: &AtomisticModel, map: &DofMap, ec: &ElasticConstants, sub: Sublattice) -> Result<BandMatrix> {
    let zero = vec![0.0; model.n_atoms()];
    let mut r = hessian_band(model, map, &zero, Parts::elastic_part(sub))?;
    let k = model.norm_factor();
    for layer in [Layer::Upper, Layer::Lower] {
        let tri = model.lattice.triangulate(layer, sub)?;
        for t in &tri.triangles {
            let w = gradient_weights(t);
            let area = t.area();
            for p in 0..3 {
                let Some((i, si)) = map.dof(t.vertices[p]) else {
                    continue;
                };
                for q in 0..3 {
                    let Some((j, sj)) = map.dof(t.vertices[q]) else {
                        continue;
                    };
                    if i < j {
                        continue;
                    }
                    let v = ec.alpha1 * w[0][p] * w[0][q] + ec.alpha2 * w[1][p] * w[1][q];
                    r.add(i, j, -k * area * si * sj * v)?;
                }
            }
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub eps: f64,
    /// Smallest value of `R(f) / ‖f‖²_{X_ε}`.
    pub min_ratio: f64,
    /// `max(0, −min_ratio)`.
    pub delta: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finite-window, finite-ε estimate of the interpolation gap of one
/// sublattice part, over unconstrained interior perturbations of the
/// perfect lattice.
pub fn interpolation_gap(model: &AtomisticModel, ec: &ElasticConstants, sub: Sublattice, opts: &EigenOptions) -> Result<GapEstimate> {
    let zero = vec![0.0; model.n_atoms()];
    let map = DofMap::new(model, Constraint::Free, &zero)?;
    let r = interpolation_gap_form(model, &map, ec, sub)?;
    let gram = XEpsGram::new(model, &map)?;
    let (est, _) = generalized_smallest(&r, &gram.gram, opts)?;
    Ok(GapEstimate {
        eps: model.eps,
        min_ratio: est.value,
        delta: (-est.value).max(0.0),
        residual: est.residual,
        iterations: est.iterations,
    })
}

/// `⟨A x, x⟩ / ⟨B x, x⟩`.
pub fn rayleigh_quotient(a: &BandMatrix, b: &BandMatrix, x: &[f64]) -> f64 {
    dot(x, &a.matvec(x)) / dot(x, &b.matvec(x))
}
