//! Symmetric banded matrices and their Cholesky factorisation.
//!
//! Atoms are stored sorted by `x` and every interaction has a finite reach
//! in `x`, so all Hessians and Gram matrices of the quasi-1D window are
//! banded with a half-bandwidth of a few hundred at most.

use crate::{Error, Result};

/// Lower band of a symmetric `n × n` matrix with half-bandwidth `bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to the symmetric pair of entries `(i, j)` and `(j, i)`
    /// (once on the diagonal).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            return Err(Error::InvalidParameter(format!(
                "entry ({i}, {j}) lies outside half-bandwidth {}",
                self.bw
            )));
        }
        let s = self.slot(i, j);
        self.data[s] += v;
        Ok(())
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += shift;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self += factor * other`; both must share size and bandwidth.
    pub fn axpy(&mut self, factor: f64, other: &BandMatrix) -> Result<()> {
        if self.n != other.n || self.bw != other.bw {
            return Err(Error::InvalidParameter("band matrices have different shapes".into()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.slot(i, i)]).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut acc = row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                acc += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
            y[i] += acc;
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// Dense copy, for tests and tiny problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut s = l[i * w + (i - j)];
                let mlo = lo.max(j.saturating_sub(bw));
                for m in mlo..j {
                    s -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                l[i * w + (i - j)] = s / l[j * w];
            }
            let mut d = l[i * w];
            for m in lo..i {
                let v = l[i * w + (i - m)];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: i, pivot: d });
            }
            l[i * w] = d.sqrt();
        }
        Ok(BandCholesky { n, bw, l })
    }
}

/// `A = L Lᵀ` with `L` lower banded.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for j in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - j)] * y[j];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            x[i] /= self.l[i * w];
            let xi = x[i];
            for j in i.saturating_sub(self.bw)..i {
                x[j] -= self.l[i * w + (i - j)] * xi;
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        let w = self.bw + 1;
        (0..self.n).map(|i| 2.0 * self.l[i * w].ln()).sum()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Preconditioned conjugate gradients for a symmetric positive-definite
/// operator. Returns the solution and the final relative residual.
pub fn pcg<A, P>(apply: A, precond: P, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bn;
        if rel <= rel_tol {
            return Ok((x, rel));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / bn;
    Err(Error::NoConvergence {
        solver: "conjugate gradients",
        iterations: max_iter,
        residual: rel,
    })
}
