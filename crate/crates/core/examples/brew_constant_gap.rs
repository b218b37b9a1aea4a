//! BREW against a fixed gap between two SBSs: regret grows like T^(2/3).

use udn_mobility::brew::{Brew, BrewConfig};
use udn_mobility::harness::brew_regret_bound;
use udn_mobility::rng::{label, stream_id, RngStream};
use udn_mobility::{Result, SbsId};

fn main() -> Result<()> {
    let energies = [0.3, 0.5];
    let e_s = 0.2;
    println!("{:>8} {:>5} {:>10} {:>10} {:>10}", "T", "tau", "regret", "R(T)/T", "bound");
    for horizon in [1_000, 10_000, 100_000] {
        let mut brew = Brew::new(&BrewConfig::new(2, horizon, e_s))?;
        let mut rng = RngStream::new(7, stream_id(&[label("example"), horizon as u64]));
        let mut cost = 0.0;
        let mut prev: Option<SbsId> = None;
        for _ in 0..horizon {
            let a = brew.select(&mut rng);
            let e = energies[a.index()];
            cost += e + if prev.is_some_and(|p| p != a) { e_s } else { 0.0 };
            prev = Some(a);
            brew.observe(Some(e))?;
        }
        let regret = cost - energies[0] * horizon as f64;
        println!("{horizon:>8} {:>5} {regret:>10.1} {:>10.4} {:>10.1}", brew.tau(), regret / horizon as f64, brew_regret_bound(2, horizon));
    }
    Ok(())
}
