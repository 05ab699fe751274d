//! Distance between the relaxed atomistic dislocation and the continuum
//! profile over a short coupling sweep.

use dislocore::config::RunConfig;
use dislocore::experiments::{converge, Setup};

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let rep = converge(&setup, &[0.1, 0.08, 0.06, 0.04]);
    for p in &rep.points {
        println!("eps {:<5} error {:.4e} ({} dofs, {} Newton steps)", p.eps, p.error, p.n_dofs, p.newton_iterations);
    }
    for f in &rep.failures {
        println!("eps {} failed: {}", f.eps, f.reason);
    }
    if let Some(f) = rep.fit {
        println!("slope {:.3} +- {:.3}", f.slope, f.stderr);
    }
    Ok(())
}
