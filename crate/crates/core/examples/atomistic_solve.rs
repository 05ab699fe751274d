//! Relaxes the atomistic dislocation at the default coupling, starting from
//! the sampled continuum profile.

use dislocore::config::RunConfig;
use dislocore::experiments::{solve_point, Setup};
use dislocore::norms::xeps_norm_sq;

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let eps = setup.point_eps();
    let sp = solve_point(&setup, eps, 1.0, 1)?;
    let d = &sp.dislocation;
    println!("eps {eps}: {} atoms, {} dofs", sp.model.n_atoms(), d.map.n_dofs());
    for (k, r) in d.report.residuals.iter().enumerate() {
        println!("  newton {k}: residual {r:.3e}");
    }
    let diff: Vec<f64> = d.field.iter().zip(&d.sampled).map(|(a, b)| a - b).collect();
    println!("distance to the continuum profile in X_eps: {:.4e}", xeps_norm_sq(&sp.model, &diff)?.sqrt());
    Ok(())
}
