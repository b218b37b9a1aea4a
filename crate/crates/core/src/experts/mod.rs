//! Expert-advice learners for SBSs that switch on and off.
//!
//! A ranking is a total order over the SBS set; given the set of SBSs that are
//! on, it recommends the best-ranked one. A ranking expert keeps one ranking
//! per previous action, so its advice accounts for both availability and the
//! handover it would cause. [`RankingExpertLearner`] runs exponential
//! weighting over all such experts plus a uniform expert;
//! [`ContextualRankingExpert`] runs an independent learner over single
//! rankings for each previous-action context.

mod contextual;
mod ranking_expert;

pub use contextual::{contextual_gamma, ContextualRankingExpert};
pub use ranking_expert::{ranking_expert_gamma, ExpertMode, RankingExpertLearner};

use crate::error::{Error, Result};
use crate::model::{AvailableSet, SbsId};
use crate::rng::RngStream;

/// Largest SBS count supported by the factored and contextual learners.
pub const MAX_FACTORED_SBS: usize = 7;
/// Largest SBS count supported by naive enumeration of ranking experts.
pub const MAX_NAIVE_SBS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking {
    perm: Vec<usize>,
}

impl Ranking {
    /// `perm[0]` is the most preferred SBS.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &a in &perm {
            if a >= n || std::mem::replace(&mut seen[a], true) {
                return Err(Error::domain(format!("{perm:?} is not a permutation of 0..{n}")));
            }
        }
        Ok(Ranking { perm })
    }

    pub fn identity(n: usize) -> Self {
        Ranking { perm: (0..n).collect() }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn recommend(&self, available: AvailableSet) -> Result<SbsId> {
        ranking_recommend(self, available)
    }
}

/// The best-ranked member of `available`.
pub fn ranking_recommend(ranking: &Ranking, available: AvailableSet) -> Result<SbsId> {
    ranking.perm.iter().map(|&a| SbsId(a)).find(|&a| available.contains(a)).ok_or_else(|| Error::domain("no SBS available to recommend"))
}

/// All rankings of `0..n` in lexicographic order.
pub fn all_rankings(n: usize) -> Vec<Ranking> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![Ranking { perm: perm.clone() }];
    while next_permutation(&mut perm) {
        out.push(Ranking { perm: perm.clone() });
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).expect("successor exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Expert in explicit form: one ranking per previous action.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingExpert {
    per_prev_action: Vec<Ranking>,
}

impl RankingExpert {
    pub fn new(per_prev_action: Vec<Ranking>) -> Result<Self> {
        let n = per_prev_action.len();
        if n == 0 || per_prev_action.iter().any(|r| r.n() != n) {
            return Err(Error::domain("a ranking expert needs one ranking of 0..N per previous action"));
        }
        Ok(RankingExpert { per_prev_action })
    }

    /// An expert that uses the same ranking whatever the previous action.
    pub fn constant(ranking: Ranking) -> Self {
        let n = ranking.n();
        RankingExpert { per_prev_action: vec![ranking; n] }
    }

    pub fn n(&self) -> usize {
        self.per_prev_action.len()
    }

    pub fn ranking_for(&self, prev: SbsId) -> &Ranking {
        &self.per_prev_action[prev.index()]
    }

    pub fn recommend(&self, prev: SbsId, available: AvailableSet) -> Result<SbsId> {
        ranking_recommend(self.ranking_for(prev), available)
    }
}

/// The uniform expert: every SBS with probability `1/N`, on or off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UniformExpert;

impl UniformExpert {
    pub fn advice(&self, n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }
}

/// Precomputed `recommend(ranking, mask)` for every ranking and availability mask.
#[derive(Debug, Clone)]
pub struct RecommendationTable {
    n: usize,
    rankings: Vec<Ranking>,
    table: Vec<u8>,
}

impl RecommendationTable {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_FACTORED_SBS {
            return Err(Error::config(format!("ranking tables support 1..={MAX_FACTORED_SBS} SBSs, got {n}")));
        }
        let rankings = all_rankings(n);
        let masks = 1usize << n;
        let mut table = vec![u8::MAX; rankings.len() * masks];
        for (r, ranking) in rankings.iter().enumerate() {
            for mask in 1..masks {
                let a = ranking_recommend(ranking, AvailableSet::from_mask(mask as u64)).expect("non-empty mask");
                table[r * masks + mask] = a.index() as u8;
            }
        }
        Ok(RecommendationTable { n, rankings, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    #[inline]
    pub fn recommend(&self, ranking: usize, available: AvailableSet) -> usize {
        self.table[(ranking << self.n) + available.mask() as usize] as usize
    }
}

/// One draw of an expert-mixture learner.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertDraw {
    /// Action drawn from the mixture; may be off (only via uniform-expert mass).
    pub sampled: SbsId,
    /// Action actually played: `sampled`, or a uniform pick among SBSs that are on.
    pub executed: SbsId,
    /// The mixture distribution the draw was made from.
    pub probs: Vec<f64>,
}

impl ExpertDraw {
    pub fn p_executed(&self) -> f64 {
        self.probs[self.executed.index()]
    }
}

pub(crate) fn draw_from_mixture(probs: Vec<f64>, available: AvailableSet, rng: &mut RngStream) -> ExpertDraw {
    let sampled = SbsId(rng.categorical(&probs));
    let executed =
        if available.contains(sampled) { sampled } else { available.nth(rng.index(available.len())).expect("non-empty availability") };
    ExpertDraw { sampled, executed, probs }
}

pub(crate) fn check_step_inputs(n: usize, context: SbsId, available: AvailableSet) -> Result<()> {
    if context.index() >= n {
        return Err(Error::domain(format!("context {context} out of range")));
    }
    if available.is_empty() {
        return Err(Error::domain("no SBS is on"));
    }
    if available.mask() >> n != 0 {
        return Err(Error::domain("availability names SBSs outside 0..N"));
    }
    Ok(())
}
