//! One exponential-weights learner per previous action: each context keeps
//! its own counter and its own ranking losses.

use udn_mobility::experts::ContextualRankingExpert;
use udn_mobility::rng::RngStream;
use udn_mobility::{AvailableSet, Result, SbsId};

fn main() -> Result<()> {
    let n = 4;
    let e_s = 0.2;
    let means = [0.2, 0.35, 0.5, 0.65];
    let mut cre = ContextualRankingExpert::new(n)?;
    let mut env = RngStream::new(21, 0);
    let mut rng = RngStream::new(21, 1);
    let mut prev = SbsId(3);
    let mut cost = 0.0;
    let horizon = 20_000;
    for _ in 0..horizon {
        let mut avail = AvailableSet::empty();
        for a in 0..n {
            if env.bernoulli(0.8) {
                avail.insert(SbsId(a));
            }
        }
        if avail.is_empty() {
            avail.insert(SbsId(env.index(n)));
        }
        let draw = cre.step(prev, avail, &mut rng)?;
        let a = draw.executed;
        let energy = (means[a.index()] + 0.3 * (env.uniform() - 0.5)).clamp(0.0, 1.0 - e_s);
        cost += energy + if a != prev { e_s } else { 0.0 };
        cre.update(prev, avail, a, draw.p_executed(), energy)?;
        prev = a;
    }
    println!("per-slot cost {:.4}", cost / horizon as f64);
    for c in 0..n {
        let (experts, uniform) = cre.expert_probabilities(SbsId(c));
        let best = experts.iter().cloned().fold(0.0, f64::max);
        println!("context {c}: kappa {:>6}, top ranking weight {best:.3}, uniform {uniform:.4}", cre.kappa(SbsId(c)));
    }
    Ok(())
}
