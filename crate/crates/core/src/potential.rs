//! Intra-layer three-body and inter-layer pair potentials with analytic
//! derivatives up to second order.

use crate::{Error, Mat2, Result, Vec2};
use serde::{Deserialize, Serialize};

/// Bond length below which a three-body argument is treated as singular.
pub const SINGULAR_BOND: f64 = 1e-9;

/// Value, gradient and Hessian blocks of a three-body potential `V(ρ1, ρ2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeBodyEval {
    pub value: f64,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d20: Mat2,
    pub d11: Mat2,
    pub d02: Mat2,
}

impl ThreeBodyEval {
    fn zero() -> Self {
        Self {
            value: 0.0,
            d1: Vec2::zeros(),
            d2: Vec2::zeros(),
            d20: Mat2::zeros(),
            d11: Mat2::zeros(),
            d02: Mat2::zeros(),
        }
    }
}

/// A site-centred three-body interaction depending on two bond vectors.
pub trait ThreeBodyPotential: Send + Sync + std::fmt::Debug {
    /// Bond length at and beyond which the interaction vanishes.
    fn cutoff(&self) -> f64;

    fn value(&self, r1: Vec2, r2: Vec2) -> Result<f64>;

    /// Value with first and second derivatives.
    fn eval(&self, r1: Vec2, r2: Vec2) -> Result<ThreeBodyEval>;
}

/// Three-body Stillinger–Weber term
/// `λ exp(γ/(r1−rc) + γ/(r2−rc)) (cos θ + 1/3)²`, zero beyond `rc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StillingerWeber {
    pub lambda: f64,
    pub gamma: f64,
    pub cutoff: f64,
}

impl StillingerWeber {
    pub fn new(lambda: f64, gamma: f64, cutoff: f64) -> Result<Self> {
        if !(lambda.is_finite() && gamma > 0.0 && gamma.is_finite() && cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Stillinger-Weber needs finite lambda, gamma > 0 and cutoff > 0 (got {lambda}, {gamma}, {cutoff})"
            )));
        }
        Ok(Self { lambda, gamma, cutoff })
    }

    /// Radial factor `R(r) = exp(γ/(r−rc))` with `R'` and `R''`.
    fn radial(&self, r: f64) -> (f64, f64, f64) {
        if r >= self.cutoff {
            return (0.0, 0.0, 0.0);
        }
        let t = 1.0 / (r - self.cutoff);
        let g = self.gamma;
        let f = (g * t).exp();
        let f1 = -g * t * t * f;
        let f2 = (g * g * t.powi(4) + 2.0 * g * t.powi(3)) * f;
        (f, f1, f2)
    }
}

impl Default for StillingerWeber {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 0.25,
            cutoff: 1.6,
        }
    }
}

fn check_bonds(r1: f64, r2: f64) -> Result<()> {
    if r1 < SINGULAR_BOND {
        return Err(Error::SingularConfiguration(r1));
    }
    if r2 < SINGULAR_BOND {
        return Err(Error::SingularConfiguration(r2));
    }
    Ok(())
}

impl ThreeBodyPotential for StillingerWeber {
    fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn value(&self, r1: Vec2, r2: Vec2) -> Result<f64> {
        let (n1, n2) = (r1.norm(), r2.norm());
        check_bonds(n1, n2)?;
        if n1 >= self.cutoff || n2 >= self.cutoff {
            return Ok(0.0);
        }
        let c = r1.dot(&r2) / (n1 * n2);
        let (f, _, _) = self.radial(n1);
        let (g, _, _) = self.radial(n2);
        Ok(self.lambda * f * g * (c + 1.0 / 3.0).powi(2))
    }

    fn eval(&self, x: Vec2, y: Vec2) -> Result<ThreeBodyEval> {
        let (r1, r2) = (x.norm(), y.norm());
        check_bonds(r1, r2)?;
        if r1 >= self.cutoff || r2 >= self.cutoff {
            return Ok(ThreeBodyEval::zero());
        }
        let id = Mat2::identity();
        let (xh, yh) = (x / r1, y / r2);

        let (f, f1, f2) = self.radial(r1);
        let (g, g1, g2) = self.radial(r2);
        let grad_f = xh * f1;
        let grad_g = yh * g1;
        let hess_f = xh * xh.transpose() * f2 + (id - xh * xh.transpose()) * (f1 / r1);
        let hess_g = yh * yh.transpose() * g2 + (id - yh * yh.transpose()) * (g1 / r2);

        let c = x.dot(&y) / (r1 * r2);
        let cx = y / (r1 * r2) - x * (c / (r1 * r1));
        let cy = x / (r1 * r2) - y * (c / (r2 * r2));
        let cxx = -(y * x.transpose() + x * y.transpose()) / (r1.powi(3) * r2)
            + x * x.transpose() * (3.0 * c / r1.powi(4))
            - id * (c / (r1 * r1));
        let cyy = -(x * y.transpose() + y * x.transpose()) / (r2.powi(3) * r1)
            + y * y.transpose() * (3.0 * c / r2.powi(4))
            - id * (c / (r2 * r2));
        let cxy = id / (r1 * r2) - y * y.transpose() / (r1 * r2.powi(3)) - x * cy.transpose() / (r1 * r1);

        let h = (c + 1.0 / 3.0).powi(2);
        let h1 = 2.0 * (c + 1.0 / 3.0);
        let h2 = 2.0;
        let l = self.lambda;

        let value = l * f * g * h;
        let d1 = (grad_f * h + cx * (f * h1)) * (l * g);
        let d2 = (grad_g * h + cy * (g * h1)) * (l * f);
        let d20 = (hess_f * h
            + (grad_f * cx.transpose() + cx * grad_f.transpose()) * h1
            + (cx * cx.transpose() * h2 + cxx * h1) * f)
            * (l * g);
        let d02 = (hess_g * h
            + (grad_g * cy.transpose() + cy * grad_g.transpose()) * h1
            + (cy * cy.transpose() * h2 + cyy * h1) * g)
            * (l * f);
        let d11 = (grad_f * grad_g.transpose() * h
            + grad_f * cy.transpose() * (g * h1)
            + cx * grad_g.transpose() * (f * h1)
            + (cx * cy.transpose() * h2 + cxy * h1) * (f * g))
            * l;
        Ok(ThreeBodyEval {
            value,
            d1,
            d2,
            d20,
            d11,
            d02,
        })
    }
}

/// Pair potential of the 3D distance with value, first and second radial
/// derivatives.
pub trait PairPotential: Send + Sync + std::fmt::Debug {
    fn cutoff(&self) -> f64;
    fn radial(&self, r: f64) -> (f64, f64, f64);
}

/// Morse potential `D (e^{-2c(r−re)} − 2 e^{-c(r−re)})`, shifted to zero at
/// `cutoff` and blended to zero with a quintic switch over the last `blend`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Morse {
    pub depth: f64,
    pub width: f64,
    pub r_e: f64,
    pub cutoff: f64,
    pub blend: f64,
}

impl Morse {
    pub fn new(depth: f64, width: f64, r_e: f64, cutoff: f64) -> Result<Self> {
        if !(depth.is_finite() && width > 0.0 && r_e > 0.0 && cutoff > r_e && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Morse needs finite depth, width > 0, r_e > 0 and cutoff > r_e (got {depth}, {width}, {r_e}, {cutoff})"
            )));
        }
        let blend = 0.5_f64.min(cutoff - r_e);
        Ok(Self {
            depth,
            width,
            r_e,
            cutoff,
            blend,
        })
    }

    /// Untruncated Morse value and derivatives.
    pub fn bare(&self, r: f64) -> (f64, f64, f64) {
        let e = (-self.width * (r - self.r_e)).exp();
        let c = self.width;
        let d = self.depth;
        (d * (e * e - 2.0 * e), d * c * (2.0 * e - 2.0 * e * e), d * c * c * (4.0 * e * e - 2.0 * e))
    }

    /// Distance beyond which `2 e^{-c(r−re)}` drops below `tol`, i.e. the
    /// tail is below `tol` relative to the well depth.
    pub fn decay_radius(width: f64, r_e: f64, tol: f64) -> f64 {
        r_e + (2.0 / tol).ln() / width
    }

    /// The same potential with the depth multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            depth: self.depth * factor,
            ..*self
        }
    }
}

fn quintic_switch(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let t2 = t * t;
    let t3 = t2 * t;
    (
        1.0 - 10.0 * t3 + 15.0 * t3 * t - 6.0 * t3 * t2,
        -30.0 * t2 + 60.0 * t3 - 30.0 * t2 * t2,
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
    )
}

impl PairPotential for Morse {
    fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn radial(&self, r: f64) -> (f64, f64, f64) {
        if r >= self.cutoff {
            return (0.0, 0.0, 0.0);
        }
        let (v, v1, v2) = self.bare(r);
        let v = v - self.bare(self.cutoff).0;
        let start = self.cutoff - self.blend;
        if r <= start {
            return (v, v1, v2);
        }
        let w = self.blend;
        let (s, s1, s2) = quintic_switch((r - start) / w);
        let (s1, s2) = (s1 / w, s2 / (w * w));
        (v * s, v1 * s + v * s1, v2 * s + 2.0 * v1 * s1 + v * s2)
    }
}

/// Inter-layer interaction as a function of the in-plane offset `ξ`,
/// `U(ξ) = W(√(|ξ|² + d_z²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interlayer {
    pub pair: Morse,
    pub layer_gap: f64,
}

impl Interlayer {
    pub fn new(pair: Morse, layer_gap: f64) -> Result<Self> {
        if !(layer_gap > 0.0 && layer_gap.is_finite()) {
            return Err(Error::InvalidParameter(format!("layer gap must be positive, got {layer_gap}")));
        }
        Ok(Self { pair, layer_gap })
    }

    /// Largest in-plane offset with a nonzero interaction.
    pub fn in_plane_cutoff(&self) -> f64 {
        let rc = self.pair.cutoff();
        (rc * rc - self.layer_gap * self.layer_gap).max(0.0).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            pair: self.pair.scaled(factor),
            ..*self
        }
    }

    pub fn value(&self, xi: Vec2) -> f64 {
        let r = (xi.norm_squared() + self.layer_gap * self.layer_gap).sqrt();
        self.pair.radial(r).0
    }

    /// Value, gradient and Hessian in `ξ`.
    pub fn eval(&self, xi: Vec2) -> (f64, Vec2, Mat2) {
        let r = (xi.norm_squared() + self.layer_gap * self.layer_gap).sqrt();
        let (w, w1, w2) = self.pair.radial(r);
        let n = xi / r;
        let grad = n * w1;
        let hess = n * n.transpose() * w2 + (Mat2::identity() * r * r - xi * xi.transpose()) * (w1 / (r * r * r));
        (w, grad, hess)
    }

    /// Value with `∂/∂ξx` and `∂²/∂ξx²`; the only derivatives needed for
    /// x-polarised displacements.
    pub fn eval_x(&self, xi: Vec2) -> (f64, f64, f64) {
        let r2 = xi.norm_squared() + self.layer_gap * self.layer_gap;
        let r = r2.sqrt();
        let (w, w1, w2) = self.pair.radial(r);
        let nx = xi.x / r;
        (w, w1 * nx, w2 * nx * nx + w1 * (1.0 - nx * nx) / r)
    }
}
