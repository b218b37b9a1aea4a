//! Feedback that arrives d slots late: regret against the delay-aware bound.

use udn_mobility::env::{ChannelSpec, GeneratorSpec, Scenario};
use udn_mobility::harness::{run_experiment, ExperimentSpec};
use udn_mobility::policy::AlgoSpec;
use udn_mobility::Result;

fn main() -> Result<()> {
    let horizon = 20_000;
    let base = Scenario::new("delay", 4, 0.2, GeneratorSpec::UniformNoise { means: vec![0.3, 0.4, 0.5, 0.6], half_width: 0.15 });
    println!("{:>5} {:>12} {:>8} {:>12}", "delay", "mean regret", "se", "bound");
    for delay in [0, 1, 3, 8] {
        let sc = base.clone().with_channel(ChannelSpec { delay, p_miss: 0.0 });
        let spec =
            ExperimentSpec::new(format!("delay-{delay}"), sc, vec![AlgoSpec::Brew { tau: None, gamma: None }], horizon).reps(10).seed(3);
        let res = run_experiment(&spec)?;
        let a = &res.algos[0];
        let bound = a.bound.as_ref().map(|b| b.bound).unwrap_or(f64::NAN);
        println!("{delay:>5} {:>12.1} {:>8.1} {bound:>12.1}", a.mean_regret, a.se);
    }
    Ok(())
}
