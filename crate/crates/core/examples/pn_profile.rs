//! Solves the Peierls-Nabarro profile for the sinusoidal toy misfit and for
//! the default bilayer, comparing the energy with the BPS bound.

use dislocore::config::RunConfig;
use dislocore::experiments::Setup;
use dislocore::material::ElasticConstants;
use dislocore::pn::{bps_bound, PnOptions, PnProfile, Sinusoidal, SlipLine};

fn main() -> dislocore::Result<()> {
    let toy = Sinusoidal { k: 1.0 };
    let ec = ElasticConstants { alpha1: 0.5, alpha2: 0.5, cross: 0.0, stress: 0.0 };
    let p = PnProfile::solve(&toy, &ec, &PnOptions::default())?;
    let sup = (0..=400)
        .map(|k| -20.0 + 0.1 * k as f64)
        .map(|x| (p.phi(x) - toy.exact(ec.alpha_eff(), x)).abs())
        .fold(0.0, f64::max);
    println!("sinusoidal: sup error against the closed form {sup:.2e}");

    let setup = Setup::new(&RunConfig::default())?;
    let line = SlipLine::new(&setup.surface);
    let (e, b) = (setup.profile.energy(&line), bps_bound(&line, setup.ec.alpha_eff()));
    println!("bilayer: kappa {:.6}, energy {e:.10}, BPS bound {b:.10}", setup.profile.kappa);
    for x in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        println!("  phi({x:>4}) = {:.8}", setup.profile.phi(x));
    }
    Ok(())
}
