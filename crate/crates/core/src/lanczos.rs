//! Lanczos iteration for extremal eigenvalues of symmetric operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banded::{dot, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub value: f64,
    /// Ritz residual `‖A v − θ v‖` of the normalised Ritz vector.
    pub residual: f64,
    pub iterations: usize,
    pub vector: Vec<f64>,
}

/// Extremal eigenpair of the symmetric operator `apply` on `ℝⁿ`, started
/// from a seeded random vector. Stops when the Ritz residual is below
/// `tol · |θ|`.
pub fn extremal<F>(apply: F, n: usize, which: Which, tol: f64, max_iter: usize, seed: u64) -> Result<EigenEstimate>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return Err(Error::InvalidParameter("empty operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);
    let max_iter = max_iter.min(n);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = None;
    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        // Full reorthogonalisation, twice.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm(&w);
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i == j + 1 {
                betas[j]
            } else if j == i + 1 {
                betas[i]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let idx = (0..m)
            .min_by(|&a, &b| {
                let (x, y) = (eig.eigenvalues[a], eig.eigenvalues[b]);
                match which {
                    Which::Smallest => x.total_cmp(&y),
                    Which::Largest => y.total_cmp(&x),
                }
            })
            .unwrap_or(0);
        let theta = eig.eigenvalues[idx];
        let s_last = eig.eigenvectors[(m - 1, idx)];
        let residual = (beta * s_last).abs();
        let converged = residual <= tol * theta.abs().max(f64::MIN_POSITIVE) || beta < 1e-14 || m == n;
        last = Some((theta, residual, idx, eig.eigenvectors.column(idx).iter().copied().collect::<Vec<_>>()));
        if converged {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|v| v / beta).collect());
    }
    let Some((theta, residual, _, s)) = last else {
        return Err(Error::InvalidParameter("no Lanczos iterations were run".into()));
    };
    let mut vector = vec![0.0; n];
    for (c, b) in s.iter().zip(&basis) {
        vector.iter_mut().zip(b).for_each(|(v, x)| *v += c * x);
    }
    let iterations = alphas.len();
    if residual > tol * theta.abs() && iterations == max_iter && max_iter < n {
        return Err(Error::NoConvergence {
            solver: "Lanczos",
            iterations,
            residual,
        });
    }
    Ok(EigenEstimate {
        value: theta,
        residual,
        iterations,
        vector,
    })
}
