use std::sync::Arc;

use super::{check_step_inputs, draw_from_mixture, ExpertDraw, RecommendationTable, MAX_FACTORED_SBS, MAX_NAIVE_SBS};
use crate::error::{Error, Result};
use crate::ew::{log_add_exp, log_sum_exp};
use crate::model::{AvailableSet, SbsId};
use crate::rng::RngStream;

/// `sqrt(ln(1 + N_E) / (t N))` with `N_E = (N!)^N`.
pub fn ranking_expert_gamma(t: usize, n: usize) -> f64 {
    (ln_pool_size(n) / (t.max(1) as f64 * n as f64)).sqrt()
}

/// `ln(1 + (N!)^N)` without forming the power.
fn ln_pool_size(n: usize) -> f64 {
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let ln_ne = n as f64 * ln_fact;
    ln_ne + (-ln_ne).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpertMode {
    /// One cumulative loss per expert, `(N!)^N` of them.
    Naive,
    /// Per-context loss tables over single rankings, `N * N!` entries.
    Factored,
}

#[derive(Debug, Clone)]
enum Losses {
    Naive(Vec<f64>),
    Factored(Vec<f64>),
}

/// Exponential weighting over every ranking expert plus the uniform expert.
///
/// An expert is a tuple of rankings indexed by the previous action; expert
/// `e` has ranking index `(e / R^x) % R` for context `x`, with `R = N!`.
/// In factored mode the cumulative loss of an expert is the sum of its
/// per-context entries, so the weight of the whole pool factorizes into a
/// product of per-context normalizers.
#[derive(Debug, Clone)]
pub struct RankingExpertLearner {
    n: usize,
    mode: ExpertMode,
    table: Arc<RecommendationTable>,
    losses: Losses,
    unif_loss: f64,
    updates: usize,
}

impl RankingExpertLearner {
    pub fn new(n: usize, mode: ExpertMode) -> Result<Self> {
        let table = Arc::new(RecommendationTable::new(n)?);
        Self::with_table(table, mode)
    }

    pub fn with_table(table: Arc<RecommendationTable>, mode: ExpertMode) -> Result<Self> {
        let n = table.n();
        let r = table.len();
        let losses = match mode {
            ExpertMode::Naive => {
                if n > MAX_NAIVE_SBS {
                    return Err(Error::config(format!(
                        "naive ranking-expert enumeration supports N <= {MAX_NAIVE_SBS}, got {n}; use the factored mode"
                    )));
                }
                Losses::Naive(vec![0.0; r.pow(n as u32)])
            }
            ExpertMode::Factored => {
                if n > MAX_FACTORED_SBS {
                    return Err(Error::config(format!("factored ranking experts support N <= {MAX_FACTORED_SBS}")));
                }
                Losses::Factored(vec![0.0; n * r])
            }
        };
        Ok(RankingExpertLearner { n, mode, table, losses, unif_loss: 0.0, updates: 0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ExpertMode {
        self.mode
    }

    /// Number of ranking experts, `(N!)^N`, as a float (it overflows quickly).
    pub fn pool_size(&self) -> f64 {
        (self.table.len() as f64).powi(self.n as i32)
    }

    /// Updates applied so far; the next step is `t = updates + 1`.
    pub fn updates(&self) -> usize {
        self.updates
    }

    fn gamma(&self) -> f64 {
        ranking_expert_gamma(self.updates.max(1), self.n)
    }

    fn ranking_of(&self, expert: usize, context: usize) -> usize {
        let r = self.table.len();
        (expert / r.pow(context as u32)) % r
    }

    /// Per-context loss table of the factored mode (`None` in naive mode).
    pub fn context_losses(&self, context: SbsId) -> Option<&[f64]> {
        match &self.losses {
            Losses::Factored(l) => {
                let r = self.table.len();
                Some(&l[context.index() * r..(context.index() + 1) * r])
            }
            Losses::Naive(_) => None,
        }
    }

    fn log_weight(&self, expert: &[usize]) -> f64 {
        let g = self.gamma();
        match &self.losses {
            Losses::Naive(l) => {
                let r = self.table.len();
                let idx = expert.iter().rev().fold(0, |acc, &s| acc * r + s);
                -g * l[idx]
            }
            Losses::Factored(l) => {
                let r = self.table.len();
                -g * expert.iter().enumerate().map(|(x, &s)| l[x * r + s]).sum::<f64>()
            }
        }
    }

    /// Log normalizer of the whole pool and log weight of the uniform expert.
    fn log_normalizers(&self) -> (f64, f64) {
        let g = self.gamma();
        let log_unif = -g * self.unif_loss;
        let log_rank = match &self.losses {
            Losses::Naive(l) => log_sum_exp(l.iter().map(|&x| -g * x)),
            Losses::Factored(l) => {
                let r = self.table.len();
                (0..self.n).map(|x| log_sum_exp(l[x * r..(x + 1) * r].iter().map(|&v| -g * v))).sum()
            }
        };
        (log_add_exp(log_rank, log_unif), log_unif)
    }

    /// Probability the learner currently puts on one expert, given as its
    /// ranking index per context.
    pub fn expert_probability(&self, expert: &[usize]) -> f64 {
        assert_eq!(expert.len(), self.n);
        let (log_w, _) = self.log_normalizers();
        (self.log_weight(expert) - log_w).exp()
    }

    pub fn uniform_expert_probability(&self) -> f64 {
        let (log_w, log_unif) = self.log_normalizers();
        (log_unif - log_w).exp()
    }

    /// Mixture `p_a = sum_e q_e delta^e_a` for the given previous action and
    /// availability.
    pub fn distribution(&self, context: SbsId, available: AvailableSet) -> Result<Vec<f64>> {
        check_step_inputs(self.n, context, available)?;
        let g = self.gamma();
        let (log_w, log_unif) = self.log_normalizers();
        let q_unif = (log_unif - log_w).exp();
        let mut p = vec![q_unif / self.n as f64; self.n];
        let r = self.table.len();
        match &self.losses {
            Losses::Naive(l) => {
                for (e, &loss) in l.iter().enumerate() {
                    let s = self.ranking_of(e, context.index());
                    p[self.table.recommend(s, available)] += (-g * loss - log_w).exp();
                }
            }
            Losses::Factored(l) => {
                let x = context.index();
                let log_z: Vec<f64> = (0..self.n).map(|c| log_sum_exp(l[c * r..(c + 1) * r].iter().map(|&v| -g * v))).collect();
                let log_others: f64 = log_z.iter().enumerate().filter(|(c, _)| *c != x).map(|(_, z)| z).sum();
                for s in 0..r {
                    let lw = -g * l[x * r + s] + log_others - log_w;
                    p[self.table.recommend(s, available)] += lw.exp();
                }
            }
        }
        Ok(p)
    }

    /// Draws an action; an off SBS drawn through the uniform expert is
    /// replaced by a uniform pick among the SBSs that are on.
    pub fn step(&self, context: SbsId, available: AvailableSet, rng: &mut RngStream) -> Result<ExpertDraw> {
        let probs = self.distribution(context, available)?;
        Ok(draw_from_mixture(probs, available, rng))
    }

    /// Credits the observed loss (handover charge included) to the executed action.
    pub fn update(&mut self, context: SbsId, available: AvailableSet, executed: SbsId, p_executed: f64, observed: f64) -> Result<()> {
        check_step_inputs(self.n, context, available)?;
        if !(p_executed > 0.0) {
            return Err(Error::domain("executed action has zero probability"));
        }
        if !observed.is_finite() || observed < 0.0 {
            return Err(Error::domain(format!("invalid observed loss {observed}")));
        }
        let x_hat = observed / p_executed;
        let r = self.table.len();
        let a = executed.index();
        match &mut self.losses {
            Losses::Naive(l) => {
                let stride = r.pow(context.index() as u32);
                for (e, loss) in l.iter_mut().enumerate() {
                    let s = (e / stride) % r;
                    if self.table.recommend(s, available) == a {
                        *loss += x_hat;
                    }
                }
            }
            Losses::Factored(l) => {
                let base = context.index() * r;
                for s in 0..r {
                    if self.table.recommend(s, available) == a {
                        l[base + s] += x_hat;
                    }
                }
            }
        }
        self.unif_loss += x_hat / self.n as f64;
        self.updates += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::all_rankings;

    fn scripted_availability(n: usize, t: usize) -> AvailableSet {
        let full = (1u64 << n) - 1;
        let mask = ((t as u64 * 2654435761) >> 7) & full;
        if mask == 0 {
            AvailableSet::from_mask(full)
        } else {
            AvailableSet::from_mask(mask)
        }
    }

    fn scripted_loss(t: usize, a: SbsId, prev: SbsId) -> f64 {
        let service = ((t * 37 + a.index() * 11) % 17) as f64 / 17.0 * 0.8;
        service + if a != prev { 0.2 } else { 0.0 }
    }

    #[test]
    fn gamma_uses_pool_size() {
        // ln(1 + 6^3) = ln 217
        assert!((ranking_expert_gamma(1, 3) - (217f64.ln() / 3.0).sqrt()).abs() < 1e-14);
        assert!((ranking_expert_gamma(4, 2) - (5f64.ln() / 8.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn first_step_is_symmetric() {
        let re = RankingExpertLearner::new(2, ExpertMode::Factored).unwrap();
        let p = re.distribution(SbsId(0), AvailableSet::all(2)).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_loss_leaves_weights_unchanged() {
        let mut re = RankingExpertLearner::new(2, ExpertMode::Factored).unwrap();
        let avail = AvailableSet::all(2);
        let p0 = re.distribution(SbsId(1), avail).unwrap();
        re.update(SbsId(1), avail, SbsId(0), p0[0], 0.0).unwrap();
        assert!(re.context_losses(SbsId(1)).unwrap().iter().all(|&l| l == 0.0));
        let p1 = re.distribution(SbsId(1), avail).unwrap();
        for (a, b) in p0.iter().zip(&p1) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn naive_guard() {
        assert!(matches!(RankingExpertLearner::new(5, ExpertMode::Naive), Err(Error::Config(_))));
        assert!(RankingExpertLearner::new(5, ExpertMode::Factored).is_ok());
    }

    #[test]
    fn factored_single_step_reproduces_naive_expert_weights() {
        let avail = AvailableSet::all(2);
        let mut naive = RankingExpertLearner::new(2, ExpertMode::Naive).unwrap();
        let mut fact = RankingExpertLearner::new(2, ExpertMode::Factored).unwrap();
        let p = naive.distribution(SbsId(0), avail).unwrap();
        naive.update(SbsId(0), avail, SbsId(1), p[1], 0.6).unwrap();
        fact.update(SbsId(0), avail, SbsId(1), p[1], 0.6).unwrap();
        let mut total = fact.uniform_expert_probability();
        assert!((total - naive.uniform_expert_probability()).abs() < 1e-15);
        for s0 in 0..2 {
            for s1 in 0..2 {
                let e = [s0, s1];
                let qf = fact.expert_probability(&e);
                assert!((qf - naive.expert_probability(&e)).abs() < 1e-15);
                total += qf;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    fn run_pair(n: usize, steps: usize, tol: f64) {
        let mut naive = RankingExpertLearner::new(n, ExpertMode::Naive).unwrap();
        let mut fact = RankingExpertLearner::new(n, ExpertMode::Factored).unwrap();
        let mut rng_n = RngStream::new(31, n as u64);
        let mut rng_f = RngStream::new(31, n as u64);
        let mut prev = SbsId(0);
        for t in 1..=steps {
            let avail = scripted_availability(n, t);
            let dn = naive.step(prev, avail, &mut rng_n).unwrap();
            let df = fact.step(prev, avail, &mut rng_f).unwrap();
            let dev = dn.probs.iter().zip(&df.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dev < tol, "step {t}: deviation {dev}");
            assert_eq!(dn.executed, df.executed);
            let loss = scripted_loss(t, dn.executed, prev);
            naive.update(prev, avail, dn.executed, dn.p_executed(), loss).unwrap();
            fact.update(prev, avail, df.executed, df.p_executed(), loss).unwrap();
            prev = dn.executed;
        }
    }

    #[test]
    fn factored_matches_naive_n3_short() {
        run_pair(3, 5, 1e-12);
    }

    #[test]
    fn factored_matches_naive_n3_long() {
        run_pair(3, 100, 1e-10);
    }

    #[test]
    fn factored_matches_naive_n2() {
        run_pair(2, 200, 1e-10);
    }

    #[test]
    fn unvisited_context_stays_uniform() {
        let mut re = RankingExpertLearner::new(3, ExpertMode::Factored).unwrap();
        let mut rng = RngStream::new(4, 4);
        for t in 1..=30 {
            let avail = scripted_availability(3, t);
            let d = re.step(SbsId(0), avail, &mut rng).unwrap();
            re.update(SbsId(0), avail, d.executed, d.p_executed(), scripted_loss(t, d.executed, SbsId(0))).unwrap();
        }
        assert!(re.context_losses(SbsId(2)).unwrap().iter().all(|&l| l == 0.0));
        assert!(re.context_losses(SbsId(0)).unwrap().iter().any(|&l| l > 0.0));
    }

    #[test]
    fn mixture_validity_and_availability() {
        let mut re = RankingExpertLearner::new(4, ExpertMode::Factored).unwrap();
        let mut rng = RngStream::new(8, 8);
        let mut prev = SbsId(2);
        for t in 1..=300 {
            let avail = scripted_availability(4, t);
            let d = re.step(prev, avail, &mut rng).unwrap();
            let q_unif = re.uniform_expert_probability();
            let s: f64 = d.probs.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(d.probs.iter().all(|&p| p >= q_unif / 4.0 - 1e-15));
            assert!(avail.contains(d.executed));
            re.update(prev, avail, d.executed, d.p_executed(), scripted_loss(t, d.executed, prev)).unwrap();
            prev = d.executed;
        }
        assert_eq!(all_rankings(4).len(), 24);
    }
}
