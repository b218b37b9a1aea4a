use std::sync::Arc;

use super::{check_step_inputs, draw_from_mixture, ExpertDraw, RecommendationTable};
use crate::error::{Error, Result};
use crate::ew::{log_add_exp, log_sum_exp};
use crate::model::{AvailableSet, SbsId};
use crate::rng::RngStream;

/// `sqrt(ln(N! + 1) / (k N))`, the step size after `k` visits to a context.
pub fn contextual_gamma(k: usize, n: usize) -> f64 {
    let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    let ln_pool = ln_fact + (-ln_fact).exp().ln_1p();
    (ln_pool / (k.max(1) as f64 * n as f64)).sqrt()
}

/// One exponential-weights learner over single rankings (plus a uniform
/// expert) per previous-action context.
///
/// `kappa(x)` starts at 1 and counts visits; a play in context `x` uses the
/// step size for `kappa(x) - 1` completed visits. Contexts never share
/// losses or step counters.
#[derive(Debug, Clone)]
pub struct ContextualRankingExpert {
    n: usize,
    table: Arc<RecommendationTable>,
    losses: Vec<f64>,
    unif_loss: Vec<f64>,
    kappa: Vec<usize>,
}

impl ContextualRankingExpert {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self::with_table(Arc::new(RecommendationTable::new(n)?)))
    }

    pub fn with_table(table: Arc<RecommendationTable>) -> Self {
        let n = table.n();
        let r = table.len();
        ContextualRankingExpert { n, table, losses: vec![0.0; n * r], unif_loss: vec![0.0; n], kappa: vec![1; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Visit counter of a context, starting at 1.
    pub fn kappa(&self, context: SbsId) -> usize {
        self.kappa[context.index()]
    }

    pub fn context_losses(&self, context: SbsId) -> &[f64] {
        let r = self.table.len();
        &self.losses[context.index() * r..(context.index() + 1) * r]
    }

    pub fn uniform_loss(&self, context: SbsId) -> f64 {
        self.unif_loss[context.index()]
    }

    fn gamma(&self, x: usize) -> f64 {
        contextual_gamma(self.kappa[x].saturating_sub(1).max(1), self.n)
    }

    /// Weights of the rankings and of the uniform expert in one context,
    /// normalized over both.
    pub fn expert_probabilities(&self, context: SbsId) -> (Vec<f64>, f64) {
        let x = context.index();
        let g = self.gamma(x);
        let losses = self.context_losses(context);
        let log_unif = -g * self.unif_loss[x];
        let log_w = log_add_exp(log_sum_exp(losses.iter().map(|&l| -g * l)), log_unif);
        let q = losses.iter().map(|&l| (-g * l - log_w).exp()).collect();
        (q, (log_unif - log_w).exp())
    }

    pub fn distribution(&self, context: SbsId, available: AvailableSet) -> Result<Vec<f64>> {
        check_step_inputs(self.n, context, available)?;
        let (q, q_unif) = self.expert_probabilities(context);
        let mut p = vec![q_unif / self.n as f64; self.n];
        for (s, qs) in q.into_iter().enumerate() {
            p[self.table.recommend(s, available)] += qs;
        }
        Ok(p)
    }

    pub fn step(&self, context: SbsId, available: AvailableSet, rng: &mut RngStream) -> Result<ExpertDraw> {
        let probs = self.distribution(context, available)?;
        Ok(draw_from_mixture(probs, available, rng))
    }

    pub fn update(&mut self, context: SbsId, available: AvailableSet, executed: SbsId, p_executed: f64, observed: f64) -> Result<()> {
        check_step_inputs(self.n, context, available)?;
        if !(p_executed > 0.0) {
            return Err(Error::domain("executed action has zero probability"));
        }
        if !observed.is_finite() || observed < 0.0 {
            return Err(Error::domain(format!("invalid observed loss {observed}")));
        }
        let x = context.index();
        let x_hat = observed / p_executed;
        let r = self.table.len();
        for s in 0..r {
            if self.table.recommend(s, available) == executed.index() {
                self.losses[x * r + s] += x_hat;
            }
        }
        self.unif_loss[x] += x_hat / self.n as f64;
        self.kappa[x] += 1;
        Ok(())
    }
}
