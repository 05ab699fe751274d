//! Experiments tying the two models together: the ε-sweep convergence
//! study, the consistency residual of the PN solution, and the stability
//! spectra.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::atomistic::{solve_dislocation, AtomisticModel, Constraint, Dislocation, DofMap, NewtonOptions, Parts, ReducedProblem};
use crate::config::{RunConfig, Sweep, DEFAULT_EPS};
use crate::geometry::{LatticeSpec, Sublattice};
use crate::lattice::TruncatedLattice;
use crate::material::{depth_for_epsilon, ElasticConstants, GammaSurface};
use crate::norms::{xeps_norm_sq, XEpsGram};
use crate::pn::{PnOptions, PnProfile, SlipLine};
use crate::potential::{Interlayer, Morse, StillingerWeber};
use crate::stability::{interpolation_gap, lambda_min, pn_stability, EigenOptions, Estimate, GapEstimate, PnStability, RayleighOptions};
use crate::{Error, Result};

/// Margin added to the interaction radius to get the window collar.
pub const COLLAR_MARGIN: f64 = 0.3;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "DISLOCORE_THREADS";

/// Potentials, continuum constants and the PN profile shared by every ε.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: RunConfig,
    pub spec: LatticeSpec,
    pub sw: StillingerWeber,
    /// Inter-layer potential with unit depth.
    pub unit: Interlayer,
    pub unit_surface: GammaSurface,
    pub ec: ElasticConstants,
    /// Depth at which `ε = 1`; the physical depth is `ε² · depth_unit_eps`.
    pub depth_unit_eps: f64,
    /// Rescaled γ-surface `γ̄ = γ/ε²`, independent of ε.
    pub surface: GammaSurface,
    pub profile: PnProfile,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let spec = LatticeSpec::new(config.a, config.d_z)?;
        let sw = StillingerWeber::new(config.lambda, config.gamma_sw, config.sw_cutoff * config.a)?;
        let morse = Morse::new(1.0, config.c, config.r_e(), config.r_cut())?;
        let unit = Interlayer::new(morse, config.d_z)?;
        let unit_surface = GammaSurface::new(spec, unit);
        let ec = ElasticConstants::compute(&sw, &spec, config.selection)?;
        let depth_unit_eps = depth_for_epsilon(&ec, &unit_surface, 1.0);
        let surface = unit_surface.scaled(depth_unit_eps);
        let opts = PnOptions {
            tol: config.ode_tol,
            ..PnOptions::default()
        };
        let profile = PnProfile::solve(&SlipLine::new(&surface), &ec, &opts)?;
        Ok(Self {
            config: config.clone(),
            spec,
            sw,
            unit,
            unit_surface,
            ec,
            depth_unit_eps,
            surface,
            profile,
        })
    }

    pub fn eps_for_depth(&self, depth: f64) -> f64 {
        (depth / self.depth_unit_eps).sqrt()
    }

    pub fn depth_for_eps(&self, eps: f64) -> f64 {
        eps * eps * self.depth_unit_eps
    }

    /// The ε values of the configured sweep.
    pub fn sweep(&self) -> Vec<f64> {
        match &self.config.sweep {
            Sweep::Eps(v) => v.clone(),
            Sweep::DE(v) => v.iter().map(|&d| self.eps_for_depth(d)).collect(),
        }
    }

    /// ε of single-point commands.
    pub fn point_eps(&self) -> f64 {
        self.config.d_e.map_or(DEFAULT_EPS, |d| self.eps_for_depth(d))
    }

    /// Collar width of the window: Morse radius plus a margin.
    pub fn lattice_cutoff(&self) -> f64 {
        self.config.r_cut() + COLLAR_MARGIN * self.spec.a
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.config.newton_tol,
            ..NewtonOptions::default()
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.config.krylov_tol,
            seed: self.config.seed,
            ..EigenOptions::default()
        }
    }

    /// Atomistic model at `ε` on a window of rescaled half-width
    /// `L · l_factor` with `n_y` periods.
    pub fn model(&self, eps: f64, l_factor: f64, n_y: usize) -> Result<AtomisticModel> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        let half_width = self.config.l * l_factor * self.spec.a / eps;
        let lat = Arc::new(TruncatedLattice::build(self.spec, half_width, n_y, self.lattice_cutoff())?);
        let inter = self.unit.scaled(self.depth_for_eps(eps));
        AtomisticModel::new(lat, Arc::new(self.sw), inter, eps, self.config.selection)
    }

    pub fn default_model(&self, eps: f64) -> Result<AtomisticModel> {
        self.model(eps, 1.0, self.config.n_y)
    }
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for two points).
    pub stderr: f64,
}

impl SlopeFit {
    /// Whether the fitted slope lies in `[target − tol, target + tol]`.
    pub fn accepts(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }

    /// `slope ± 2 stderr`.
    pub fn window(&self) -> (f64, f64) {
        (self.slope - 2.0 * self.stderr, self.slope + 2.0 * self.stderr)
    }
}

pub fn fit_log_log(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit { slope, intercept, stderr })
}

/// Worker count: `DISLOCORE_THREADS` if set, else hardware parallelism.
pub fn worker_count() -> usize {
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(hw)
}

/// Maps `f` over `items` on up to [`worker_count`] threads, preserving
/// order.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = worker_count().min(items.len()).max(1);
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                if let Ok(mut g) = slots.lock() {
                    g[k] = Some(r);
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("every item is processed")).collect()
}

/// One solved ε point.
#[derive(Debug, Clone)]
pub struct SolvedPoint {
    pub model: AtomisticModel,
    pub dislocation: Dislocation,
}

pub fn solve_point(setup: &Setup, eps: f64, l_factor: f64, n_y: usize) -> Result<SolvedPoint> {
    let model = setup.model(eps, l_factor, n_y)?;
    let dislocation = solve_dislocation(&model, &setup.profile, &setup.newton_options())?;
    Ok(SolvedPoint { model, dislocation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub eps: f64,
    pub depth: f64,
    /// `‖v^ε − v‖_{X_ε}`.
    pub error: f64,
    pub n_atoms: usize,
    pub n_dofs: usize,
    pub newton_iterations: usize,
    pub residual: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub eps: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    pub failures: Vec<Failure>,
    pub fit: Option<SlopeFit>,
    /// Rescaled half-width and periods of the windows.
    pub l: f64,
    pub n_y: usize,
    pub lattice_cutoff: f64,
}

impl ConvergenceReport {
    /// Ratio of the largest to the smallest ε that succeeded.
    pub fn span(&self) -> f64 {
        let (lo, hi) = self.points.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p.eps), hi.max(p.eps)));
        hi / lo
    }
}

pub fn convergence_point(setup: &Setup, eps: f64, l_factor: f64, n_y: usize) -> Result<ConvergencePoint> {
    let t0 = Instant::now();
    let sp = solve_point(setup, eps, l_factor, n_y)?;
    let d = &sp.dislocation;
    let diff: Vec<f64> = d.field.iter().zip(&d.sampled).map(|(a, b)| a - b).collect();
    let error = xeps_norm_sq(&sp.model, &diff)?.sqrt();
    Ok(ConvergencePoint {
        eps,
        depth: setup.depth_for_eps(eps),
        error,
        n_atoms: sp.model.n_atoms(),
        n_dofs: d.map.n_dofs(),
        newton_iterations: d.report.residuals.len() - 1,
        residual: *d.report.residuals.last().unwrap_or(&f64::NAN),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

fn split<T>(eps: &[f64], results: Vec<Result<T>>) -> (Vec<T>, Vec<Failure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (&e, r) in eps.iter().zip(results) {
        match r {
            Ok(p) => ok.push(p),
            Err(err) => failures.push(Failure {
                eps: e,
                reason: err.to_string(),
            }),
        }
    }
    (ok, failures)
}

/// ε-sweep of the atomistic-vs-PN error. Points whose solve fails are
/// excluded from the fit and listed in `failures`.
pub fn converge(setup: &Setup, eps: &[f64]) -> ConvergenceReport {
    let n_y = setup.config.n_y;
    let results = parallel_map(eps, |&e| convergence_point(setup, e, 1.0, n_y));
    let (points, failures) = split(eps, results);
    let fit = fit_log_log(&points.iter().map(|p| (p.eps, p.error)).collect::<Vec<_>>());
    ConvergenceReport {
        points,
        failures,
        fit,
        l: setup.config.l,
        n_y,
        lattice_cutoff: setup.lattice_cutoff(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub eps: f64,
    /// Dual norm of `δE_a[v]` over the constrained tangent space.
    pub residual: f64,
    /// Dual norm over all interior dofs.
    pub unconstrained: f64,
    /// Relative residuals of the two Riesz solves.
    pub riesz_residual: f64,
    pub riesz_residual_unconstrained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub points: Vec<ConsistencyPoint>,
    pub failures: Vec<Failure>,
    pub fit: Option<SlopeFit>,
    pub fit_unconstrained: Option<SlopeFit>,
}

/// Dual norm of the atomistic gradient at the sampled field `v` for the
/// given constraint.
pub fn gradient_dual_norm(model: &AtomisticModel, v: &[f64], constraint: Constraint) -> Result<(f64, f64)> {
    let map = DofMap::new(model, constraint, v)?;
    let gram = XEpsGram::new(model, &map)?;
    let problem = ReducedProblem::new(model, map.clone(), Parts::ALL);
    let (_, g) = problem.gradient(&map.restrict(v))?;
    let dn = gram.dual_norm(&g);
    Ok((dn.value, dn.residual))
}

pub fn consistency_point(setup: &Setup, eps: f64, l_factor: f64, n_y: usize) -> Result<ConsistencyPoint> {
    let model = setup.model(eps, l_factor, n_y)?;
    let v = model.sample(&setup.profile);
    let (residual, rr) = gradient_dual_norm(&model, &v, Constraint::Dislocation)?;
    let (unconstrained, ru) = gradient_dual_norm(&model, &v, Constraint::Free)?;
    Ok(ConsistencyPoint {
        eps,
        residual,
        unconstrained,
        riesz_residual: rr,
        riesz_residual_unconstrained: ru,
    })
}

pub fn consistency(setup: &Setup, eps: &[f64]) -> ConsistencyReport {
    let n_y = setup.config.n_y;
    let results = parallel_map(eps, |&e| consistency_point(setup, e, 1.0, n_y));
    let (points, failures) = split(eps, results);
    let fit = fit_log_log(&points.iter().map(|p| (p.eps, p.residual)).collect::<Vec<_>>());
    let fit_unconstrained = fit_log_log(&points.iter().map(|p| (p.eps, p.unconstrained)).collect::<Vec<_>>());
    ConsistencyReport {
        points,
        failures,
        fit,
        fit_unconstrained,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub a: GapEstimate,
    pub b: GapEstimate,
}

impl GapPoint {
    pub fn delta(&self) -> f64 {
        self.a.delta.max(self.b.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eps: f64,
    /// Smallest eigenvalue of the reduced Hessian at the solved dislocation.
    pub lambda_min: Estimate,
    pub pn: PnStability,
    /// ϑ recomputed from a second Lanczos seed.
    pub theta_reseeded: f64,
    pub gaps: Vec<GapPoint>,
}

impl StabilityReport {
    pub fn theta(&self) -> f64 {
        self.pn.theta.value
    }

    pub fn theta_bar(&self) -> f64 {
        self.pn.theta_bar()
    }

    /// Gap at the smallest ε computed.
    pub fn delta(&self) -> f64 {
        self.gaps
            .iter()
            .min_by(|x, y| x.a.eps.total_cmp(&y.a.eps))
            .map_or(f64::NAN, GapPoint::delta)
    }
}

/// Interpolation gaps `Δ_A`, `Δ_B` for the gap potential of the config at
/// each of its ε values.
pub fn gap_points(setup: &Setup) -> Result<Vec<GapPoint>> {
    let g = &setup.config.gap;
    let sw = StillingerWeber::new(g.lambda, g.gamma_sw, g.sw_cutoff * setup.spec.a)?;
    let ec = ElasticConstants::compute(&sw, &setup.spec, g.selection)?;
    let lat = Arc::new(TruncatedLattice::build(setup.spec, g.half_width * setup.spec.a, g.n_y, setup.lattice_cutoff())?);
    let opts = setup.eigen_options();
    g.eps
        .iter()
        .map(|&eps| {
            let model = AtomisticModel::new(lat.clone(), Arc::new(sw), setup.unit.scaled(setup.depth_for_eps(eps)), eps, g.selection)?;
            Ok(GapPoint {
                a: interpolation_gap(&model, &ec, Sublattice::A, &opts)?,
                b: interpolation_gap(&model, &ec, Sublattice::B, &opts)?,
            })
        })
        .collect()
}

pub fn pn_stability_for(setup: &Setup, seed: u64) -> Result<PnStability> {
    let mut opts = RayleighOptions::default();
    opts.eigen.tol = setup.config.krylov_tol;
    opts.eigen.seed = seed;
    pn_stability(&setup.profile, &setup.surface, &opts)
}

pub fn stability(setup: &Setup, eps: f64) -> Result<StabilityReport> {
    let sp = solve_point(setup, eps, 1.0, setup.config.n_y)?;
    let problem = ReducedProblem::new(&sp.model, sp.dislocation.map.clone(), Parts::ALL);
    let lambda_min = lambda_min(&problem, &sp.dislocation.report.q, &setup.eigen_options())?;
    let pn = pn_stability_for(setup, setup.config.seed)?;
    let reseeded = pn_stability_for(setup, setup.config.seed.wrapping_add(1))?;
    Ok(StabilityReport {
        eps,
        lambda_min,
        pn,
        theta_reseeded: reseeded.theta.value,
        gaps: gap_points(setup)?,
    })
}
