//! The threshold rules on a sequence built to trap them: the macro rule stays
//! on the worse SBS and its regret grows linearly, while BREW learns.

use udn_mobility::env::{GeneratorSpec, Scenario};
use udn_mobility::harness::{run_experiment, ExperimentSpec};
use udn_mobility::Result;

fn main() -> Result<()> {
    let sc = Scenario::new("stuck", 2, 0.2, GeneratorSpec::StuckThreshold { theta: 0.1 }).with_measurement_lag(0);
    let algos = ["macro", "fho", "ext-macro", "brew"].iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
    println!("{:>8} {:>12} {:>12} {:>12}", "T", "algorithm", "regret", "R(T)/T");
    for horizon in [1_000, 10_000, 100_000] {
        let res = run_experiment(&ExperimentSpec::new("stuck", sc.clone(), algos.clone(), horizon).reps(5).seed(9))?;
        for a in &res.algos {
            println!("{horizon:>8} {:>12} {:>12.1} {:>12.4}", a.label, a.mean_regret, a.mean_regret / horizon as f64);
        }
    }
    Ok(())
}
