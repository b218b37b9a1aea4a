//! Lost feedback: plain BREW against the variant that reweights each batch
//! by the probability of its observation pattern.

use udn_mobility::env::{ChannelSpec, GeneratorSpec, Scenario};
use udn_mobility::harness::{run_experiment, ExperimentSpec};
use udn_mobility::policy::AlgoSpec;
use udn_mobility::Result;

fn main() -> Result<()> {
    let horizon = 20_000;
    let base = Scenario::new("missing", 4, 0.2, GeneratorSpec::UniformNoise { means: vec![0.3, 0.4, 0.5, 0.6], half_width: 0.15 });
    println!("{:>6} {:>22} {:>12} {:>8}", "p_miss", "algorithm", "mean regret", "se");
    for p_miss in [0.0, 0.1, 0.3, 0.6] {
        let sc = base.clone().with_channel(ChannelSpec { delay: 0, p_miss });
        let algos = vec![AlgoSpec::Brew { tau: None, gamma: None }, AlgoSpec::BrewMissing { p: None, tau: None }];
        let res = run_experiment(&ExperimentSpec::new("missing", sc, algos, horizon).reps(10).seed(5))?;
        for a in &res.algos {
            println!("{p_miss:>6} {:>22} {:>12.1} {:>8.1}", a.label, a.mean_regret, a.se);
        }
    }
    Ok(())
}
