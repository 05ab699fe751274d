//! Peierls–Nabarro profile: the first integral `½ α1 φ'² = γ(φ)` with
//! `φ(0) = ½`, integrated outward and mirrored through the point symmetry
//! `φ(−x) = 1 − φ(x)`.

use serde::{Deserialize, Serialize};

use crate::material::{ElasticConstants, GammaSurface, MisfitPart};
use crate::ode::{integrate, OdeOptions};
use crate::{Error, Result};

/// Values with `|γ| ≤ CLAMP·γ''(0)` are roundoff around a zero of γ.
pub const CLAMP: f64 = 1e-10;

/// Misfit energy along the slip line, `t ↦ (γ, γ', γ'')`.
pub trait Misfit1D: Send + Sync {
    fn gamma(&self, t: f64) -> (f64, f64, f64);
}

/// The slip-line restriction `γ(t, 0)` of a γ-surface (or one of its parts).
#[derive(Debug, Clone, Copy)]
pub struct SlipLine<'a> {
    pub surface: &'a GammaSurface,
    pub part: MisfitPart,
}

impl<'a> SlipLine<'a> {
    pub fn new(surface: &'a GammaSurface) -> Self {
        Self {
            surface,
            part: MisfitPart::Total,
        }
    }
}

impl Misfit1D for SlipLine<'_> {
    fn gamma(&self, t: f64) -> (f64, f64, f64) {
        self.surface.along_x(t, self.part)
    }
}

/// `γ(t) = K sin²(π t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoidal {
    pub k: f64,
}

impl Misfit1D for Sinusoidal {
    fn gamma(&self, t: f64) -> (f64, f64, f64) {
        let pi = std::f64::consts::PI;
        let (s, c) = (pi * t).sin_cos();
        (self.k * s * s, 2.0 * pi * self.k * s * c, 2.0 * pi * pi * self.k * (c * c - s * s))
    }
}

impl Sinusoidal {
    /// Closed-form profile `φ(x) = (2/π) arctan(exp(c π x))`,
    /// `c = 2√K/√α_eff`.
    pub fn exact(&self, alpha_eff: f64, x: f64) -> f64 {
        let c = 2.0 * self.k.sqrt() / alpha_eff.sqrt();
        std::f64::consts::FRAC_2_PI * (c * std::f64::consts::PI * x).exp().atan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnOptions {
    pub tol: f64,
    /// Integration stops when `1 − φ` drops below this; beyond it the tail
    /// is the linearised exponential.
    pub tail_threshold: f64,
    /// Hard limit on the integration range.
    pub x_max: f64,
}

impl Default for PnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            tail_threshold: 1e-6,
            x_max: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnProfile {
    /// Nonnegative grid, `x[0] = 0`.
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// Decay rate of `1 − φ` beyond the grid.
    pub kappa: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_eff: f64,
    pub y_scale: f64,
}

impl PnProfile {
    pub fn solve(misfit: &dyn Misfit1D, ec: &ElasticConstants, opts: &PnOptions) -> Result<Self> {
        if !(opts.tol > 0.0 && opts.tail_threshold > 0.0 && opts.x_max > 0.0) {
            return Err(Error::InvalidParameter("PN options must be positive".into()));
        }
        let alpha_eff = ec.alpha_eff();
        let gxx = misfit.gamma(0.0).2;
        if !(gxx > 0.0) {
            return Err(Error::Assumption {
                name: "A6",
                detail: format!("gamma'' at 0 must be positive, got {gxx:e}"),
            });
        }
        let kappa = (2.0 * gxx / alpha_eff).sqrt();
        let floor = CLAMP * gxx;
        let rhs = |x: f64, phi: f64| -> Result<f64> {
            let g = misfit.gamma(phi).0;
            if g < -floor {
                return Err(Error::NegativeGamma { value: g, at: x });
            }
            Ok(2.0 / alpha_eff.sqrt() * g.max(0.0).sqrt())
        };
        let ode = OdeOptions {
            tol: opts.tol,
            h_init: 1e-3 / kappa,
            h_max: 0.05 / kappa,
            max_steps: 1_000_000,
        };
        let thr = opts.tail_threshold;
        let traj = integrate(rhs, 0.0, 0.5, opts.x_max, &ode, |_, y| 1.0 - y < thr)?;
        Ok(Self {
            x: traj.x,
            phi: traj.y,
            dphi: traj.dy,
            kappa,
            alpha1: ec.alpha1,
            alpha2: ec.alpha2,
            alpha_eff,
            y_scale: ec.y_scale(),
        })
    }

    pub fn x_end(&self) -> f64 {
        *self.x.last().unwrap_or(&0.0)
    }

    /// `(φ, φ')` for `x ≥ 0`.
    fn eval_right(&self, x: f64) -> (f64, f64) {
        let n = self.x.len();
        let xe = self.x[n - 1];
        if x >= xe {
            let eta = (1.0 - self.phi[n - 1]) * (-self.kappa * (x - xe)).exp();
            return (1.0 - eta, self.kappa * eta);
        }
        let k = self.x.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let (y0, y1) = (self.phi[k], self.phi[k + 1]);
        let h = x1 - x0;
        let delta = (y1 - y0) / h;
        let (mut m0, mut m1) = (self.dphi[k], self.dphi[k + 1]);
        if delta <= 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (a, b) = (m0 / delta, m1 / delta);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m0 *= tau;
                m1 *= tau;
            }
        }
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let phi = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let dphi = (6.0 * t2 - 6.0 * t) / h * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) / h * y1 + (3.0 * t2 - 2.0 * t) * m1;
        (phi, dphi)
    }

    pub fn phi(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.eval_right(x).0
        } else {
            1.0 - self.eval_right(-x).0
        }
    }

    pub fn dphi(&self, x: f64) -> f64 {
        self.eval_right(x.abs()).1
    }

    /// Upper-layer displacement `φ/2`.
    pub fn u_plus(&self, x: f64) -> f64 {
        0.5 * self.phi(x)
    }

    /// Lower-layer displacement `−φ/2`.
    pub fn u_minus(&self, x: f64) -> f64 {
        -0.5 * self.phi(x)
    }

    /// `∫ ½ α1 φ'² + γ(φ) dx` over the real line by Gauss–Legendre
    /// quadrature of the interpolant, plus the analytic tail.
    pub fn energy(&self, misfit: &dyn Misfit1D) -> f64 {
        let (nodes, weights) = gauss_legendre_5();
        let density = |x: f64| {
            let (p, dp) = self.eval_right(x);
            0.5 * self.alpha1 * dp * dp + misfit.gamma(p).0.max(0.0)
        };
        let mut half = 0.0;
        for w in self.x.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
            half += r * nodes.iter().zip(&weights).map(|(t, wt)| wt * density(m + r * t)).sum::<f64>();
        }
        let eta = 1.0 - self.phi[self.phi.len() - 1];
        let gxx = misfit.gamma(0.0).2;
        half += (0.5 * self.alpha1 * self.kappa * self.kappa + 0.5 * gxx) * eta * eta / (2.0 * self.kappa);
        2.0 * half
    }

    /// Samples `(x, φ, φ', u⁺, u⁻)` on the mirrored grid.
    pub fn table(&self) -> Vec<[f64; 5]> {
        let mut rows = Vec::with_capacity(2 * self.x.len());
        for k in (1..self.x.len()).rev() {
            let x = -self.x[k];
            let p = 1.0 - self.phi[k];
            rows.push([x, p, self.dphi[k], 0.5 * p, -0.5 * p]);
        }
        for k in 0..self.x.len() {
            let p = self.phi[k];
            rows.push([self.x[k], p, self.dphi[k], 0.5 * p, -0.5 * p]);
        }
        rows
    }
}

/// The lower bound `∫₀¹ √(α_eff γ(η)) dη` on the PN energy.
pub fn bps_bound(misfit: &dyn Misfit1D, alpha_eff: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_5();
    let panels = 400;
    let h = 1.0 / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let m = (k as f64 + 0.5) * h;
        for (t, w) in nodes.iter().zip(&weights) {
            let g = misfit.gamma(m + 0.5 * h * t).0.max(0.0);
            s += 0.5 * h * w * (alpha_eff * g).sqrt();
        }
    }
    s
}

pub fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let a = (5.0 - 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70.0_f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70.0_f64.sqrt()) / 900.0;
    ([-b, -a, 0.0, a, b], [wb, wa, 128.0 / 225.0, wa, wb])
}
