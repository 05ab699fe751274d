//! Adaptive Dormand–Prince 5(4) integration of a scalar ODE `y' = f(x, y)`.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local error tolerance per step (mixed absolute/relative).
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Accepted steps `(x, y, f(x, y))`, starting with the initial point.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `x0` towards `x_end > x0`, stopping early once
/// `stop(x, y)` holds after an accepted step.
pub fn integrate<F, S>(mut f: F, x0: f64, y0: f64, x_end: f64, opts: &OdeOptions, stop: S) -> Result<Trajectory>
where
    F: FnMut(f64, f64) -> Result<f64>,
    S: Fn(f64, f64) -> bool,
{
    if !(opts.tol > 0.0 && opts.h_init > 0.0 && opts.h_max > 0.0) || x_end <= x0 {
        return Err(Error::InvalidParameter("ODE options must be positive and x_end > x0".into()));
    }
    let mut traj = Trajectory::default();
    let (mut x, mut y) = (x0, y0);
    let mut k1 = f(x, y)?;
    traj.x.push(x);
    traj.y.push(y);
    traj.dy.push(k1);
    let mut h = opts.h_init.min(opts.h_max);
    let mut steps = 0;
    while x < x_end {
        if steps >= opts.max_steps {
            return Err(Error::NoConvergence {
                solver: "Dormand-Prince",
                iterations: steps,
                residual: h,
            });
        }
        steps += 1;
        h = h.min(x_end - x);
        let mut k = [0.0; 7];
        k[0] = k1;
        for s in 1..7 {
            let ys = y + h * (0..s).map(|m| A[s][m] * k[m]).sum::<f64>();
            k[s] = f(x + C[s] * h, ys)?;
        }
        let y5 = y + h * (0..7).map(|s| B5[s] * k[s]).sum::<f64>();
        let y4 = y + h * (0..7).map(|s| B4[s] * k[s]).sum::<f64>();
        let scale = opts.tol * (1.0 + y.abs().max(y5.abs()));
        let err = (y5 - y4).abs() / scale;
        if err <= 1.0 {
            x += h;
            y = y5;
            k1 = k[6];
            traj.x.push(x);
            traj.y.push(y);
            traj.dy.push(k1);
            if stop(x, y) {
                break;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.h_max);
        if h < 1e-14 * (1.0 + x.abs()) {
            return Err(Error::NoConvergence {
                solver: "Dormand-Prince",
                iterations: steps,
                residual: err,
            });
        }
    }
    Ok(traj)
}
