//! Piecewise-linear interpolation of discrete fields on a triangulation.

use crate::lattice::{Triangle, Triangulation};
use crate::Vec2;

/// `T(x, y) = A x + B y + C` on every triangle.
#[derive(Debug, Clone)]
pub struct Interpolant<'a> {
    pub tri: &'a Triangulation,
    pub coeffs: Vec<[f64; 3]>,
}

/// Linear Lagrange coefficients `(A, B, C)` from vertex values.
pub fn linear_coefficients(t: &Triangle, v: [f64; 3]) -> [f64; 3] {
    let [p1, p2, p3] = t.pos;
    let delta = t.delta();
    let a = ((p2.y - p3.y) * v[0] + (p3.y - p1.y) * v[1] + (p1.y - p2.y) * v[2]) / delta;
    let b = ((p3.x - p2.x) * v[0] + (p1.x - p3.x) * v[1] + (p2.x - p1.x) * v[2]) / delta;
    [a, b, v[0] - a * p1.x - b * p1.y]
}

/// Gradient map of a triangle: rows `∂ₓ`, `∂ᵧ` as weights on the vertices.
pub fn gradient_weights(t: &Triangle) -> [[f64; 3]; 2] {
    let [p1, p2, p3] = t.pos;
    let delta = t.delta();
    [
        [(p2.y - p3.y) / delta, (p3.y - p1.y) / delta, (p1.y - p2.y) / delta],
        [(p3.x - p2.x) / delta, (p1.x - p3.x) / delta, (p2.x - p1.x) / delta],
    ]
}

impl<'a> Interpolant<'a> {
    /// Interpolates a full atom vector `f` (indexed by atom id).
    pub fn new(tri: &'a Triangulation, f: &[f64]) -> Self {
        let coeffs = tri
            .triangles
            .iter()
            .map(|t| linear_coefficients(t, t.vertices.map(|v| f[v])))
            .collect();
        Self { tri, coeffs }
    }

    pub fn eval_in(&self, t: usize, q: Vec2) -> f64 {
        let q = self.tri.unwrap_for(t, q);
        let [a, b, c] = self.coeffs[t];
        a * q.x + b * q.y + c
    }

    /// Value at `q`, or `None` outside the triangulated region.
    pub fn eval(&self, q: Vec2) -> Option<f64> {
        self.tri.locate(q).map(|t| self.eval_in(t, q))
    }

    pub fn gradient(&self, t: usize) -> Vec2 {
        Vec2::new(self.coeffs[t][0], self.coeffs[t][1])
    }
}

/// `∫_τ T²` for a linear `T` with vertex values `v`.
pub fn square_integral(t: &Triangle, v: [f64; 3]) -> f64 {
    let s = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[0] * v[1] + v[1] * v[2] + v[2] * v[0];
    t.area() * s / 6.0
}
