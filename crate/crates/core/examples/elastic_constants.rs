//! Elastic constants of the default Stillinger-Weber layer and the
//! Morse depth that sets the coupling parameter to one.

use dislocore::config::RunConfig;
use dislocore::experiments::Setup;

fn main() -> dislocore::Result<()> {
    let setup = Setup::new(&RunConfig::default())?;
    let ec = setup.ec;
    println!("alpha1    = {:.9}", ec.alpha1);
    println!("alpha2    = {:.9}", ec.alpha2);
    println!("cross     = {:.3e}", ec.cross);
    println!("alpha_eff = {:.9}", ec.alpha_eff());
    println!("Morse depth giving eps = 1: {:.9}", setup.depth_unit_eps);
    Ok(())
}
