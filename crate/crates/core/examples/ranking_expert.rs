//! Ranking experts with SBSs that switch on and off: the factored learner
//! reproduces the naive enumeration of all (N!)^N experts.

use udn_mobility::experts::{ExpertMode, RankingExpertLearner};
use udn_mobility::rng::RngStream;
use udn_mobility::{AvailableSet, Result, SbsId};

fn main() -> Result<()> {
    let n = 3;
    let means = [0.2, 0.45, 0.7];
    let mut naive = RankingExpertLearner::new(n, ExpertMode::Naive)?;
    let mut factored = RankingExpertLearner::new(n, ExpertMode::Factored)?;
    let mut env = RngStream::new(11, 0);
    let mut rng = RngStream::new(11, 1);
    let mut prev = SbsId(0);
    let mut max_dev: f64 = 0.0;
    let mut played = [0usize; 3];
    for _ in 0..5_000 {
        let mut avail = AvailableSet::empty();
        for a in 0..n {
            if env.bernoulli(0.7) {
                avail.insert(SbsId(a));
            }
        }
        if avail.is_empty() {
            avail.insert(SbsId(env.index(n)));
        }
        let p_naive = naive.distribution(prev, avail)?;
        let draw = factored.step(prev, avail, &mut rng)?;
        for (x, y) in p_naive.iter().zip(&draw.probs) {
            max_dev = max_dev.max((x - y).abs());
        }
        let a = draw.executed;
        let loss = (means[a.index()] + 0.2 * (env.uniform() - 0.5)).clamp(0.0, 0.8);
        naive.update(prev, avail, a, draw.p_executed(), loss)?;
        factored.update(prev, avail, a, draw.p_executed(), loss)?;
        played[a.index()] += 1;
        prev = a;
    }
    println!("experts in pool: {}", factored.pool_size());
    println!("max |naive - factored| over 5000 slots: {max_dev:.2e}");
    println!("plays per SBS: {played:?}");
    println!("uniform expert weight: {:.4}", factored.uniform_expert_probability());
    Ok(())
}
