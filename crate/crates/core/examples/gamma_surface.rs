//! Prints the misfit energy along the slip direction and its curvature at 0.

use dislocore::config::RunConfig;
use dislocore::experiments::Setup;
use dislocore::material::MisfitPart;

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let s = &setup.surface;
    println!("gamma_xx(0) = {:.6e}", s.hessian_at_zero()[(0, 0)]);
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "gamma", "gamma_A", "gamma_B");
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let part = |p| s.along_x(t, p).0;
        println!("{t:>6.2} {:>14.6e} {:>14.6e} {:>14.6e}", part(MisfitPart::Total), part(MisfitPart::A), part(MisfitPart::B));
    }
    Ok(())
}
