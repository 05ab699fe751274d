use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dislocore::atomistic::{Constraint, DofMap};
use dislocore::config::RunConfig;
use dislocore::experiments::{self, Setup};
use dislocore::material::{check_assumptions, MisfitPart, StabilityInputs};
use dislocore::output::{field_table, write_checkpoint, CheckpointHeader, OutputDir, Table};
use dislocore::pn::{bps_bound, Misfit1D, PnOptions, PnProfile, Sinusoidal, SlipLine};
use dislocore::{Error, Vec2};

#[derive(Parser)]
#[command(name = "dislocore", version, about = "Atomistic and Peierls-Nabarro edge dislocations in AB bilayers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SlopeArgs {
    /// Fail with exit code 3 unless the fitted slope lies in TARGET ± TOL.
    #[arg(long, value_name = "TARGET:TOL", value_parser = parse_slope)]
    assert_slope: Option<(f64, f64)>,
}

fn parse_slope(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected TARGET:TOL")?;
    let t = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let w = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    if !(w >= 0.0) {
        return Err("TOL must be nonnegative".into());
    }
    Ok((t, w))
}

#[derive(Subcommand)]
enum Command {
    /// γ along the slip line, with its sublattice parts.
    Gamma(Common),
    /// Long-wave elastic constants and ε.
    Elastic(Common),
    /// PN profile (or the sinusoidal test profile if configured).
    PnSolve(Common),
    /// Atomistic dislocation at a single ε.
    AtomSolve(Common),
    /// Dual-norm residual of the PN solution in the atomistic equations.
    Consistency {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        slope: SlopeArgs,
    },
    /// Stability spectra of both models and the interpolation gaps.
    Stability(Common),
    /// ε-sweep of the atomistic-vs-PN error.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        slope: SlopeArgs,
    },
    /// Numerical spot checks of the modelling assumptions.
    CheckAssumptions(Common),
}

enum Failure {
    Validation(String),
    Solver(String),
    Acceptance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) | Error::InvalidParameter(_) => Failure::Validation(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", common.config.display())))?;
    let cfg = RunConfig::from_json(&text).map_err(|e| Failure::Validation(format!("{}: {e}", common.config.display())))?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn check_slope(fit: Option<experiments::SlopeFit>, assert: Option<(f64, f64)>, what: &str) -> Outcome {
    let Some((target, tol)) = assert else {
        return Ok(());
    };
    match fit {
        Some(f) if f.accepts(target, tol) => Ok(()),
        Some(f) => Err(Failure::Acceptance(format!(
            "{what} slope {:.4} (2-stderr window [{:.4}, {:.4}]) outside {target} ± {tol}",
            f.slope,
            f.window().0,
            f.window().1
        ))),
        None => Err(Failure::Acceptance(format!("{what}: fewer than two usable points"))),
    }
}

fn gamma(common: &Common) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let mut out = OutputDir::create(&dir, "gamma", &cfg)?;
    let s = &setup.surface;
    let mut t = Table::new(&["t", "gamma", "gamma_A", "gamma_B"]);
    let n = 200;
    for k in 0..=n {
        let x = k as f64 / n as f64;
        t.push(vec![
            x.into(),
            s.along_x(x, MisfitPart::Total).0.into(),
            s.along_x(x, MisfitPart::A).0.into(),
            s.along_x(x, MisfitPart::B).0.into(),
        ]);
    }
    out.write_table("gamma.csv", &t)?;
    out.note("gamma_xx_0", s.hessian_at_zero()[(0, 0)]);
    out.note("gamma_yy_0", s.hessian_at_zero()[(1, 1)]);
    out.note("depth_unit_eps", setup.depth_unit_eps);
    out.note("gamma_at_zero", s.value(Vec2::zeros()));
    out.finish(t0.elapsed().as_secs_f64())?;
    Ok(())
}

fn elastic(common: &Common) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let mut out = OutputDir::create(&dir, "elastic", &cfg)?;
    let ec = setup.ec;
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("alpha1", ec.alpha1),
        ("alpha2", ec.alpha2),
        ("cross", ec.cross),
        ("stress", ec.stress),
        ("alpha_eff", ec.alpha_eff()),
        ("alpha_bps", ec.alpha()),
        ("y_scale", ec.y_scale()),
        ("depth_unit_eps", setup.depth_unit_eps),
        ("eps_point", setup.point_eps()),
    ] {
        t.push(vec![k.into(), v.into()]);
    }
    out.write_table("elastic.csv", &t)?;
    out.note("alpha1", ec.alpha1);
    out.note("alpha2", ec.alpha2);
    out.finish(t0.elapsed().as_secs_f64())?;
    Ok(())
}

fn pn_solve(common: &Common) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let mut out = OutputDir::create(&dir, "pn-solve", &cfg)?;
    let opts = PnOptions {
        tol: cfg.ode_tol,
        ..PnOptions::default()
    };
    let mut header = vec!["x", "phi", "dphi_dx", "u_plus", "u_minus"];
    let (profile, misfit, exact): (PnProfile, Box<dyn Misfit1D>, Option<Sinusoidal>) = match &cfg.sinusoidal {
        Some(s) => {
            let toy = Sinusoidal { k: s.k };
            let ec = dislocore::material::ElasticConstants {
                alpha1: s.alpha1,
                alpha2: s.alpha1,
                cross: 0.0,
                stress: 0.0,
            };
            header.push("phi_exact");
            (PnProfile::solve(&toy, &ec, &opts)?, Box::new(toy), Some(toy))
        }
        None => {
            let setup = Setup::new(&cfg)?;
            let surface = setup.surface.clone();
            (setup.profile, Box::new(OwnedSlip(surface)), None)
        }
    };
    let mut t = Table::new(&header);
    let mut sup = 0.0_f64;
    for row in profile.table() {
        let mut r: Vec<_> = row.iter().map(|&v| v.into()).collect();
        if let Some(toy) = exact {
            let e = toy.exact(profile.alpha_eff, row[0]);
            sup = sup.max((e - row[1]).abs());
            r.push(e.into());
        }
        t.push(r);
    }
    out.write_table("profile.csv", &t)?;
    let energy = profile.energy(misfit.as_ref());
    let bound = bps_bound(misfit.as_ref(), profile.alpha_eff);
    out.note("energy", energy);
    out.note("bps_bound", bound);
    out.note("kappa", profile.kappa);
    if exact.is_some() {
        out.note("sup_error_vs_exact", sup);
    }
    out.finish(t0.elapsed().as_secs_f64())?;
    Ok(())
}

/// Slip-line misfit owning its surface.
struct OwnedSlip(dislocore::material::GammaSurface);

impl Misfit1D for OwnedSlip {
    fn gamma(&self, t: f64) -> (f64, f64, f64) {
        SlipLine::new(&self.0).gamma(t)
    }
}

fn atom_solve(common: &Common) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let eps = setup.point_eps();
    let sp = experiments::solve_point(&setup, eps, 1.0, cfg.n_y)?;
    let mut out = OutputDir::create(&dir, "atom-solve", &cfg)?;
    let d = &sp.dislocation;
    out.write_table("field.csv", &field_table(&sp.model.lattice, &d.field))?;
    let mut hist = Table::new(&["iteration", "residual", "energy"]);
    for (k, (r, e)) in d.report.residuals.iter().zip(&d.report.energies).enumerate() {
        hist.push(vec![k.into(), (*r).into(), (*e).into()]);
    }
    out.write_table("newton.csv", &hist)?;
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &CheckpointHeader::new(&sp.model.lattice, eps), &d.report.q)?;
    out.write_bytes("checkpoint.dcor", &bytes)?;
    let diff: Vec<f64> = d.field.iter().zip(&d.sampled).map(|(a, b)| a - b).collect();
    out.note("eps", eps);
    out.note("error_xeps", dislocore::norms::xeps_norm_sq(&sp.model, &diff)?.sqrt());
    out.note("n_dofs", d.map.n_dofs());
    out.note("energy", d.report.energy);
    out.note("constraint_violation", DofMap::new(&sp.model, Constraint::Dislocation, &d.sampled)?.violation(&d.field));
    out.finish(t0.elapsed().as_secs_f64())?;
    Ok(())
}

fn consistency(common: &Common, slope: &SlopeArgs) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let rep = experiments::consistency(&setup, &setup.sweep());
    let mut out = OutputDir::create(&dir, "consistency", &cfg)?;
    let mut t = Table::new(&["eps", "residual", "residual_unconstrained", "riesz_residual", "riesz_residual_unconstrained"]);
    for p in &rep.points {
        t.push(vec![
            p.eps.into(),
            p.residual.into(),
            p.unconstrained.into(),
            p.riesz_residual.into(),
            p.riesz_residual_unconstrained.into(),
        ]);
    }
    out.write_table("consistency.csv", &t)?;
    out.note("fit", rep.fit);
    out.note("fit_unconstrained", rep.fit_unconstrained);
    out.note("failures", &rep.failures);
    out.finish(t0.elapsed().as_secs_f64())?;
    if rep.points.is_empty() {
        return Err(Failure::Solver("every consistency point failed".into()));
    }
    check_slope(rep.fit, slope.assert_slope, "consistency")
}

fn converge(common: &Common, slope: &SlopeArgs) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let rep = experiments::converge(&setup, &setup.sweep());
    let mut out = OutputDir::create(&dir, "converge", &cfg)?;
    let mut t = Table::new(&["eps", "depth", "error", "n_atoms", "n_dofs", "newton_iterations", "residual"]);
    for p in &rep.points {
        t.push(vec![
            p.eps.into(),
            p.depth.into(),
            p.error.into(),
            p.n_atoms.into(),
            p.n_dofs.into(),
            p.newton_iterations.into(),
            p.residual.into(),
        ]);
    }
    out.write_table("convergence.csv", &t)?;
    out.note("fit", rep.fit);
    out.note("failures", &rep.failures);
    out.note("eps_span", rep.span());
    out.note("L", rep.l);
    out.note("n_y", rep.n_y);
    out.note("lattice_cutoff", rep.lattice_cutoff);
    out.finish(t0.elapsed().as_secs_f64())?;
    if rep.points.is_empty() {
        return Err(Failure::Solver("every sweep point failed".into()));
    }
    check_slope(rep.fit, slope.assert_slope, "convergence")
}

fn stability(common: &Common) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let rep = experiments::stability(&setup, setup.point_eps())?;
    let mut out = OutputDir::create(&dir, "stability", &cfg)?;
    let mut t = Table::new(&["quantity", "eps", "value", "residual", "iterations"]);
    let mut row = |name: &str, eps: f64, e: &dislocore::stability::Estimate| {
        t.push(vec![name.into(), eps.into(), e.value.into(), e.residual.into(), e.iterations.into()]);
    };
    row("lambda_min", rep.eps, &rep.lambda_min);
    row("theta", f64::NAN, &rep.pn.theta);
    row("theta_bar_A", f64::NAN, &rep.pn.theta_a);
    row("theta_bar_B", f64::NAN, &rep.pn.theta_b);
    for g in &rep.gaps {
        for (name, e) in [("delta_A", &g.a), ("delta_B", &g.b)] {
            t.push(vec![name.into(), e.eps.into(), e.delta.into(), e.residual.into(), e.iterations.into()]);
        }
    }
    out.write_table("stability.csv", &t)?;
    out.note("theta", rep.theta());
    out.note("theta_reseeded", rep.theta_reseeded);
    out.note("theta_bar", rep.theta_bar());
    out.note("lambda_min", rep.lambda_min.value);
    out.note("delta", rep.delta());
    out.finish(t0.elapsed().as_secs_f64())?;
    if !(rep.lambda_min.value > 0.0) {
        return Err(Failure::Acceptance(format!("lambda_min = {:e} at eps = {}", rep.lambda_min.value, rep.eps)));
    }
    if !(rep.theta() > 0.0) {
        return Err(Failure::Acceptance(format!("theta = {:e}", rep.theta())));
    }
    Ok(())
}

fn assumptions(common: &Common) -> Outcome {
    let t0 = Instant::now();
    let (cfg, dir) = load(common)?;
    let setup = Setup::new(&cfg)?;
    let pn = experiments::pn_stability_for(&setup, cfg.seed)?;
    let gaps = experiments::gap_points(&setup)?;
    let delta = gaps.iter().map(|g| g.delta()).fold(0.0, f64::max);
    let inputs = StabilityInputs {
        theta: pn.theta.value,
        theta_bar: pn.theta_bar(),
        delta,
    };
    let physical = setup.unit_surface.scaled(setup.depth_for_eps(setup.point_eps()));
    let rep = check_assumptions(&setup.sw, &setup.ec, &physical, Some(&inputs));
    let mut out = OutputDir::create(&dir, "check-assumptions", &cfg)?;
    let mut t = Table::new(&["name", "passed", "detail"]);
    for c in &rep.checks {
        t.push(vec![c.name.clone().into(), c.passed.into(), c.detail.clone().into()]);
    }
    out.write_table("assumptions.csv", &t)?;
    out.note("epsilon", rep.epsilon);
    out.note("all_passed", rep.all_passed());
    out.finish(t0.elapsed().as_secs_f64())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gamma(c) => gamma(c),
        Command::Elastic(c) => elastic(c),
        Command::PnSolve(c) => pn_solve(c),
        Command::AtomSolve(c) => atom_solve(c),
        Command::Consistency { common, slope } => consistency(common, slope),
        Command::Stability(c) => stability(c),
        Command::Converge { common, slope } => converge(common, slope),
        Command::CheckAssumptions(c) => assumptions(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Acceptance(m)) => {
            eprintln!("acceptance failure: {m}");
            ExitCode::from(3)
        }
    }
}
