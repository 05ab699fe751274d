//! Checks the modelling assumptions for the default configuration without
//! the expensive stability inputs.

use dislocore::config::RunConfig;
use dislocore::experiments::Setup;
use dislocore::material::check_assumptions;

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let physical = setup.unit_surface.scaled(setup.depth_for_eps(setup.point_eps()));
    let rep = check_assumptions(&setup.sw, &setup.ec, &physical, None);
    println!("eps = {:.6}", rep.epsilon);
    for c in &rep.checks {
        println!("{:<4} {} {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
    }
    Ok(())
}
