//! An adversary that switches off the SBS just used forces a handover every
//! slot, so every learner pays about T * E_max / N above the best ranking.

use udn_mobility::env::forced_handover_scenario;
use udn_mobility::harness::{run_experiment, ExperimentSpec};
use udn_mobility::Result;

fn main() -> Result<()> {
    let (n, horizon, e_max) = (4, 2_000, 0.2);
    // the handover cost must outweigh any energy saving from staying put
    let sc = forced_handover_scenario(n, horizon, e_max + 1.0 / (n - 1) as f64, e_max)?;
    let algos = ["brew", "re", "cre", "macro"].iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
    let res = run_experiment(&ExperimentSpec::new("adaptive", sc, algos, horizon).reps(5).seed(4))?;
    println!("lower bound T*E_max/N = {:.0}", horizon as f64 * e_max / n as f64);
    for a in &res.algos {
        let handovers = a.runs.iter().map(|r| r.handovers).min().unwrap_or(0);
        println!("{:>8}: mean regret {:>8.1}, fewest handovers {handovers}", a.label, a.mean_regret);
    }
    Ok(())
}
