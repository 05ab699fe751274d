//! Smallest Hessian eigenvalue of the relaxed dislocation, the continuum
//! stability constant and the interpolation gap estimates.

use dislocore::config::RunConfig;
use dislocore::experiments::{stability, Setup};

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let rep = stability(&setup, setup.point_eps())?;
    println!("lambda_min {:.4e} at eps {}", rep.lambda_min.value, rep.eps);
    println!("theta {:.5}, theta_bar {:.5}", rep.theta(), rep.theta_bar());
    for g in &rep.gaps {
        println!("gap at eps {}: Delta_A {:.4e}, Delta_B {:.4e}", g.a.eps, g.a.delta, g.b.delta);
    }
    Ok(())
}
