//! Continuum inputs of the PN model: the γ-surface, the elastic constants
//! and the small parameter ε.

use serde::{Deserialize, Serialize};

use crate::geometry::{LatticeSpec, Layer, Species, Sublattice, SQRT3};
use crate::potential::{Interlayer, ThreeBodyPotential};
use crate::terms::{triplet_terms, Selection};
use crate::{Error, Mat2, Result, Vec2};

/// Row weights for the three distinct inter-layer row offsets
/// `[−d, −d−p, p−d]`; the `−d` row occurs twice (A⁺A⁻ and B⁺B⁻).
const ROWS_TOTAL: [f64; 3] = [2.0, 1.0, 1.0];
const ROWS_A: [f64; 3] = [1.0, 0.0, 1.0];
const ROWS_B: [f64; 3] = [1.0, 1.0, 0.0];

/// Which part of the misfit energy to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisfitPart {
    Total,
    /// Pairs whose lower-layer atom is on sublattice A.
    A,
    /// Pairs whose lower-layer atom is on sublattice B.
    B,
}

impl MisfitPart {
    fn weights(self) -> [f64; 3] {
        match self {
            MisfitPart::Total => ROWS_TOTAL,
            MisfitPart::A => ROWS_A,
            MisfitPart::B => ROWS_B,
        }
    }
}

/// Misfit energy per unit area as a function of the disregistry `φ`.
#[derive(Debug, Clone)]
pub struct GammaSurface {
    pub spec: LatticeSpec,
    pub inter: Interlayer,
    rows: [Vec<Vec2>; 3],
    reference: [f64; 3],
}

impl GammaSurface {
    pub fn new(spec: LatticeSpec, inter: Interlayer) -> Self {
        let (p, d) = (spec.p(), spec.d());
        let centres = [-d, -d - p, p - d];
        // |φ| ≤ a/√3 after reduction, so this margin keeps every pair that
        // can enter the cutoff.
        let reach = inter.in_plane_cutoff() + spec.a;
        let rows = centres.map(|c| {
            let n = (reach / spec.a).ceil() as i64 + 2;
            let mut v = Vec::new();
            for j in -2 * n..=2 * n {
                for i in -3 * n..=3 * n {
                    let x = spec.cell(i, j) + c;
                    if x.norm() <= reach {
                        v.push(x);
                    }
                }
            }
            v.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.y.total_cmp(&b.y)).then(a.x.total_cmp(&b.x)));
            v
        });
        Self::with_rows(spec, inter, rows)
    }

    fn with_rows(spec: LatticeSpec, inter: Interlayer, rows: [Vec<Vec2>; 3]) -> Self {
        // Summed exactly as in the evaluators so that γ(0) is exactly zero.
        let reference = [0, 1, 2].map(|r| rows[r].iter().map(|x| inter.value(*x)).sum());
        Self {
            spec,
            inter,
            rows,
            reference,
        }
    }

    fn prefactor(&self) -> f64 {
        2.0 / (SQRT3 * self.spec.a * self.spec.a)
    }

    pub fn value(&self, phi: Vec2) -> f64 {
        self.value_part(phi, MisfitPart::Total)
    }

    pub fn value_part(&self, phi: Vec2, part: MisfitPart) -> f64 {
        let phi = self.spec.reduce(phi);
        let w = part.weights();
        let mut total = 0.0;
        for r in 0..3 {
            if w[r] == 0.0 {
                continue;
            }
            let s: f64 = self.rows[r].iter().map(|x| self.inter.value(phi + x)).sum();
            total += w[r] * (s - self.reference[r]);
        }
        self.prefactor() * total
    }

    /// Value, gradient and Hessian of a part of γ.
    pub fn eval_part(&self, phi: Vec2, part: MisfitPart) -> (f64, Vec2, Mat2) {
        let phi = self.spec.reduce(phi);
        let w = part.weights();
        let (mut v, mut g, mut h) = (0.0, Vec2::zeros(), Mat2::zeros());
        for r in 0..3 {
            if w[r] == 0.0 {
                continue;
            }
            let (mut sv, mut sg, mut sh) = (0.0, Vec2::zeros(), Mat2::zeros());
            for x in &self.rows[r] {
                let (a, b, c) = self.inter.eval(phi + x);
                sv += a;
                sg += b;
                sh += c;
            }
            v += w[r] * (sv - self.reference[r]);
            g += sg * w[r];
            h += sh * w[r];
        }
        let k = self.prefactor();
        (k * v, g * k, h * k)
    }

    pub fn eval(&self, phi: Vec2) -> (f64, Vec2, Mat2) {
        self.eval_part(phi, MisfitPart::Total)
    }

    /// `(γ, γ', γ'')` along `φ = (t, 0)`.
    pub fn along_x(&self, t: f64, part: MisfitPart) -> (f64, f64, f64) {
        let phi = self.spec.reduce(Vec2::new(t, 0.0));
        let w = part.weights();
        let (mut v, mut g, mut h) = (0.0, 0.0, 0.0);
        for r in 0..3 {
            if w[r] == 0.0 {
                continue;
            }
            let (mut sv, mut sg, mut sh) = (0.0, 0.0, 0.0);
            for x in &self.rows[r] {
                let (a, b, c) = self.inter.eval_x(phi + x);
                sv += a;
                sg += b;
                sh += c;
            }
            v += w[r] * (sv - self.reference[r]);
            g += w[r] * sg;
            h += w[r] * sh;
        }
        let k = self.prefactor();
        (k * v, k * g, k * h)
    }

    /// `∇²γ(0)`.
    pub fn hessian_at_zero(&self) -> Mat2 {
        self.eval(Vec2::zeros()).2
    }

    /// The same surface for a potential whose depth is scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::with_rows(self.spec, self.inter.scaled(factor), self.rows.clone())
    }
}

/// Long-wave elastic constants of one layer for x-polarised displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticConstants {
    /// Coefficient of `(∂ₓu)²` in the energy density.
    pub alpha1: f64,
    /// Coefficient of `(∂ᵧu)²`.
    pub alpha2: f64,
    /// Coefficient of `∂ₓu ∂ᵧu`.
    pub cross: f64,
    /// Residual stress: coefficient of `∂ₓu` (nonzero for a three-body-only
    /// potential, irrelevant for displacement fields that vanish at infinity).
    pub stress: f64,
}

impl ElasticConstants {
    /// Closed-form lattice sums over the site-energy terms of both
    /// sublattices.
    pub fn compute(v: &dyn ThreeBodyPotential, spec: &LatticeSpec, selection: Selection) -> Result<Self> {
        let (mut a1, mut a2, mut cross, mut stress) = (0.0, 0.0, 0.0, 0.0);
        for sub in [Sublattice::A, Sublattice::B] {
            let center = Species::new(Layer::Upper, sub);
            for t in triplet_terms(spec, center, v.cutoff(), selection) {
                let (s1, s2) = (t.first.vec, t.second.vec);
                let e = v.eval(s1, s2)?;
                let (h20, h11, h02) = (e.d20[(0, 0)], e.d11[(0, 0)], e.d02[(0, 0)]);
                let w = t.weight;
                a1 += w * 0.5 * (h20 * s1.x * s1.x + 2.0 * h11 * s1.x * s2.x + h02 * s2.x * s2.x);
                a2 += w * 0.5 * (h20 * s1.y * s1.y + 2.0 * h11 * s1.y * s2.y + h02 * s2.y * s2.y);
                cross += w * (h20 * s1.x * s1.y + h11 * (s1.x * s2.y + s1.y * s2.x) + h02 * s2.x * s2.y);
                stress += w * (e.d1.x * s1.x + e.d2.x * s2.x);
            }
        }
        let area = spec.cell_area();
        let ec = Self {
            alpha1: a1 / area,
            alpha2: a2 / area,
            cross: cross / area,
            stress: stress / area,
        };
        if !(ec.alpha1 > 0.0) || !(ec.alpha2 > 0.0) {
            return Err(Error::Assumption {
                name: "A5",
                detail: format!("elastic constants must be positive, got alpha1 = {}, alpha2 = {}", ec.alpha1, ec.alpha2),
            });
        }
        Ok(ec)
    }

    /// `½√(α1 α2)`, the constant quoted with the first-order condition.
    pub fn alpha(&self) -> f64 {
        0.5 * (self.alpha1 * self.alpha2).sqrt()
    }

    /// Constant `α_eff` in `φ' = (2/√α_eff) √γ(φ)`, the Euler–Lagrange
    /// first integral of `∫ ½ α1 φ'² + γ(φ)`; equal to `2 α1`.
    pub fn alpha_eff(&self) -> f64 {
        2.0 * self.alpha1
    }

    /// `√(α1/α2)`: the y-rescaling that makes the elastic form isotropic.
    pub fn y_scale(&self) -> f64 {
        (self.alpha1 / self.alpha2).sqrt()
    }
}

/// `ε = √(a² γ_xx(0) / √(α1 α2))`.
pub fn epsilon(ec: &ElasticConstants, gs: &GammaSurface) -> Result<f64> {
    let h = gs.hessian_at_zero();
    check_positive_definite(&h)?;
    let a = gs.spec.a;
    Ok((a * a * h[(0, 0)] / (ec.alpha1 * ec.alpha2).sqrt()).sqrt())
}

/// Tolerance on the eigenvalues of `∇²γ(0)`.
pub const PD_TOL: f64 = 1e-12;

pub fn check_positive_definite(h: &Mat2) -> Result<()> {
    let eig = h.symmetric_eigenvalues();
    let min = eig.min();
    if min <= PD_TOL {
        return Err(Error::Assumption {
            name: "A6",
            detail: format!("Hessian of gamma at 0 is not positive definite (smallest eigenvalue {min:e})"),
        });
    }
    Ok(())
}

/// Depth of the inter-layer potential that realises a given `ε`, given
/// the surface `unit` computed with unit depth.
pub fn depth_for_epsilon(ec: &ElasticConstants, unit: &GammaSurface, eps: f64) -> f64 {
    let a = unit.spec.a;
    eps * eps * (ec.alpha1 * ec.alpha2).sqrt() / (a * a * unit.hessian_at_zero()[(0, 0)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Quantities from the stability experiments needed by A7 and A8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityInputs {
    pub theta: f64,
    pub theta_bar: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub epsilon: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Numerical spot checks of the structural assumptions. Never fails;
/// violations are reported.
pub fn check_assumptions(
    v: &dyn ThreeBodyPotential,
    ec: &ElasticConstants,
    gs: &GammaSurface,
    stability: Option<&StabilityInputs>,
) -> AssumptionReport {
    use rand::{Rng, SeedableRng};
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(AssumptionCheck {
            name: name.into(),
            passed,
            detail,
        })
    };
    let h = gs.hessian_at_zero();
    let a = gs.spec.a;
    let eps = (a * a * h[(0, 0)] / (ec.alpha1 * ec.alpha2).abs().sqrt()).abs().sqrt();
    push("A1", eps < 0.2 && h[(0, 0)] > 0.0, format!("epsilon = {eps:.6e} (threshold 0.2)"));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let mut sym = 0.0_f64;
    for _ in 0..100 {
        let r1 = Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let r2 = Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        if let (Ok(x), Ok(y), Ok(z)) = (v.value(r1, r2), v.value(-r1, -r2), v.value(r2, r1)) {
            sym = sym.max((x - y).abs()).max((x - z).abs());
        }
        let xi = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        sym = sym.max((gs.inter.value(xi) - gs.inter.value(-xi)).abs());
    }
    push("A2", sym <= 1e-12, format!("max symmetry residual {sym:.3e}"));

    let radii: Vec<f64> = (0..12).map(|k| 2.0 * a * 1.25_f64.powi(k)).collect();
    let tail: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let (w, w1, _) = crate::potential::PairPotential::radial(&gs.inter.pair, r);
            (w.abs(), w1.abs())
        })
        .collect();
    let mono = tail.windows(2).all(|p| p[1].0 <= p[0].0 && p[1].1 <= p[0].1);
    let sw_tail = radii.iter().all(|&r| r < v.cutoff() || v.value(Vec2::new(r, 0.0), Vec2::new(0.0, r)).unwrap_or(0.0) == 0.0);
    push("A4", mono && sw_tail, format!("pair tail monotone beyond 2a: {mono}; three-body vanishes beyond its cutoff: {sw_tail}"));

    push(
        "A5",
        ec.alpha1 > 0.0 && ec.alpha2 > 0.0,
        format!("alpha1 = {:.6e}, alpha2 = {:.6e}", ec.alpha1, ec.alpha2),
    );

    let eig = h.symmetric_eigenvalues();
    let pd = eig.min() > PD_TOL;
    let n = 200;
    let (mut best, mut arg) = (f64::INFINITY, (0usize, 0usize));
    for i in 0..n {
        for j in 0..n {
            let phi = gs.spec.e1() * (i as f64 / n as f64) + gs.spec.e2() * (j as f64 / n as f64);
            let g = gs.value(phi);
            if g < best {
                best = g;
                arg = (i, j);
            }
        }
    }
    let on_lattice = (arg.0 == 0 || arg.0 == n) && (arg.1 == 0 || arg.1 == n);
    let global = best >= -1e-12;
    push(
        "A6",
        pd && on_lattice && global,
        format!(
            "eigenvalues of Hessian at 0: ({:.6e}, {:.6e}); grid argmin at ({}, {})/{n} with value {best:.3e}",
            eig[0], eig[1], arg.0, arg.1
        ),
    );

    if let Some(s) = stability {
        push(
            "A7",
            s.theta_bar >= s.theta / 3.0,
            format!("theta_bar = {:.6e}, theta/3 = {:.6e}", s.theta_bar, s.theta / 3.0),
        );
        let bound = (1.0 / 3.0_f64).min(s.theta_bar / 3.0);
        push("A8", s.delta < bound, format!("Delta = {:.6e}, bound = {:.6e}", s.delta, bound));
    }
    AssumptionReport { epsilon: eps, checks }
}
