//! Exponential-weighting primitives shared by the batched learner and the
//! expert-advice learners.

use crate::error::{Error, Result};
use crate::model::SbsId;

/// Learning-rate schedule `l -> gamma_l`, non-increasing in `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSchedule {
    /// `gamma_l = sqrt(numerator / (l * n))`.
    Anytime {
        numerator: f64,
        n: usize,
    },
    Constant(f64),
}

impl GammaSchedule {
    /// `sqrt(2 ln N / (l N))`, the schedule of the batched learner.
    pub fn anytime(n: usize) -> Self {
        GammaSchedule::Anytime { numerator: 2.0 * (n as f64).ln(), n }
    }

    pub fn constant(gamma: f64) -> Self {
        GammaSchedule::Constant(gamma)
    }

    pub fn gamma(&self, l: usize) -> f64 {
        match *self {
            GammaSchedule::Anytime { numerator, n } => {
                if n < 2 || numerator <= 0.0 {
                    0.0
                } else {
                    (numerator / (l.max(1) as f64 * n as f64)).sqrt()
                }
            }
            GammaSchedule::Constant(g) => g,
        }
    }
}

/// `sqrt(2 ln N / (l N))`; zero for a single arm.
pub fn gamma_anytime(l: usize, n: usize) -> f64 {
    GammaSchedule::anytime(n).gamma(l)
}

/// `p_a ∝ exp(-gamma * L_a)`, computed relative to the minimum loss.
pub fn softmin_probabilities(cum_loss: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if cum_loss.is_empty() {
        return Err(Error::domain("empty loss vector"));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::domain(format!("invalid learning rate {gamma}")));
    }
    if cum_loss.iter().any(|l| !l.is_finite()) {
        return Err(Error::domain("non-finite cumulative loss"));
    }
    let min = cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = cum_loss.iter().map(|&l| (-gamma * (l - min)).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

/// `log(sum(exp(x)))` without overflow.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Importance-weighted loss estimate: the selected arm receives
/// `observed / p_selected`, every other arm zero.
pub fn importance_estimate(observed: f64, p_selected: f64, selected: SbsId, n: usize) -> Result<Vec<f64>> {
    if !(p_selected > 0.0 && p_selected <= 1.0) {
        return Err(Error::domain(format!("selection probability {p_selected} outside (0, 1]")));
    }
    if selected.index() >= n {
        return Err(Error::domain(format!("arm {selected} out of range for {n} arms")));
    }
    let mut est = vec![0.0; n];
    est[selected.index()] = observed / p_selected;
    Ok(est)
}

/// Cumulative estimated losses plus the probability vector derived from them.
///
/// `round` is the index `l` of the round about to be played. Round 1 plays the
/// uniform distribution; after round `l` is recorded the next distribution is
/// `softmin(gamma_l * L_l)`.
#[derive(Debug, Clone)]
pub struct WeightState {
    cum_est_loss: Vec<f64>,
    schedule: GammaSchedule,
    round: usize,
    probs: Vec<f64>,
}

impl WeightState {
    pub fn new(n: usize, schedule: GammaSchedule) -> Self {
        assert!(n >= 1);
        WeightState { cum_est_loss: vec![0.0; n], schedule, round: 1, probs: vec![1.0 / n as f64; n] }
    }

    pub fn n(&self) -> usize {
        self.cum_est_loss.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn cum_est_loss(&self) -> &[f64] {
        &self.cum_est_loss
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn schedule(&self) -> GammaSchedule {
        self.schedule
    }

    /// Adds one round of estimates, recomputes the distribution with the
    /// current round's rate and advances the round counter.
    pub fn record(&mut self, estimates: &[f64]) -> Result<()> {
        if estimates.len() != self.n() {
            return Err(Error::domain("estimate vector has wrong length"));
        }
        if estimates.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::domain("estimates must be finite and non-negative"));
        }
        for (l, e) in self.cum_est_loss.iter_mut().zip(estimates) {
            *l += e;
        }
        let gamma = self.schedule.gamma(self.round);
        self.probs = softmin_probabilities(&self.cum_est_loss, gamma)?;
        self.round += 1;
        Ok(())
    }
}
