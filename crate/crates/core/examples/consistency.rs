//! Dual norm of the atomistic gradient at the sampled continuum profile over
//! a short coupling sweep.

use dislocore::config::RunConfig;
use dislocore::experiments::{consistency, Setup};

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let rep = consistency(&setup, &[0.1, 0.08, 0.06, 0.04]);
    for p in &rep.points {
        println!("eps {:<5} residual {:.4e} (unconstrained {:.4e})", p.eps, p.residual, p.unconstrained);
    }
    if let Some(f) = rep.fit {
        println!("slope {:.3} +- {:.3}", f.slope, f.stderr);
    }
    Ok(())
}
