//! Batched randomization with exponential weighting.
//!
//! The learner draws an SBS from its exponential-weights distribution at the
//! start of each batch of `tau` slots, holds it for the whole batch, and at
//! the batch end feeds the batch-average observed energy into an
//! importance-weighted update. The missing-feedback variant averages over
//! the observed slots only and additionally divides by the binomial
//! probability of the realized observation count.

use crate::error::{Error, Result};
use crate::ew::{importance_estimate, GammaSchedule, WeightState};
use crate::model::SbsId;
use crate::rng::RngStream;

/// `B_N = (4.5 N ln N)^(-1/3)`.
pub fn brew_b_n(n: usize) -> f64 {
    (4.5 * n as f64 * (n as f64).ln()).powf(-1.0 / 3.0)
}

/// `ceil(B_N T^(1/3))`, at least one. A single arm never switches, so it
/// gets unit batches.
pub fn brew_batch_length(n: usize, horizon: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let tau = (brew_b_n(n) * (horizon as f64).cbrt()).ceil();
    (tau as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchLength {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct BrewConfig {
    pub n_arms: usize,
    pub horizon: usize,
    pub batch: BatchLength,
    /// `None` selects the anytime schedule `sqrt(2 ln N / (l N))`.
    pub gamma: Option<GammaSchedule>,
    pub handover_cost: f64,
}

impl BrewConfig {
    pub fn new(n_arms: usize, horizon: usize, handover_cost: f64) -> Self {
        BrewConfig { n_arms, horizon, batch: BatchLength::Auto, gamma: None, handover_cost }
    }

    pub fn with_batch(mut self, tau: usize) -> Self {
        self.batch = BatchLength::Fixed(tau);
        self
    }

    pub fn with_gamma(mut self, gamma: GammaSchedule) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn tau(&self) -> usize {
        match self.batch {
            BatchLength::Auto => brew_batch_length(self.n_arms, self.horizon),
            BatchLength::Fixed(t) => t,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_arms == 0 {
            return Err(Error::config("BREW needs at least one arm"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if self.tau() == 0 {
            return Err(Error::config("batch length must be at least 1"));
        }
        if !(self.handover_cost >= 0.0) {
            return Err(Error::config("handover cost must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissingFeedbackConfig {
    p_miss: f64,
}

impl MissingFeedbackConfig {
    pub fn new(p_miss: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p_miss) {
            return Err(Error::config(format!("missing-feedback probability {p_miss} must lie in [0, 1)")));
        }
        Ok(MissingFeedbackConfig { p_miss })
    }

    pub fn p_miss(&self) -> f64 {
        self.p_miss
    }

    /// `C(len, observed) (1-p)^observed p^(len-observed)`.
    pub fn observation_probability(&self, len: usize, observed: usize) -> f64 {
        let p = self.p_miss;
        binomial(len, observed) * (1.0 - p).powi(observed as i32) * p.powi((len - observed) as i32)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Feedback collected while one batch is played.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchAccumulator {
    pub batch_index: usize,
    pub chosen: SbsId,
    slots: usize,
    excluded: usize,
    observed_sum: f64,
    observed_count: usize,
}

impl BatchAccumulator {
    pub fn new(batch_index: usize, chosen: SbsId) -> Self {
        BatchAccumulator { batch_index, chosen, slots: 0, excluded: 0, observed_sum: 0.0, observed_count: 0 }
    }

    /// Registers one played slot and the feedback that arrived in it, if any.
    pub fn record_slot(&mut self, feedback: Option<f64>) {
        self.slots += 1;
        if let Some(v) = feedback {
            self.observed_sum += v;
            self.observed_count += 1;
        }
    }

    /// Registers a played slot whose feedback cannot be used, such as one
    /// where a substitute SBS was served.
    pub fn record_excluded(&mut self) {
        self.slots += 1;
        self.excluded += 1;
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Played slots whose feedback could have been observed.
    pub fn eligible(&self) -> usize {
        self.slots - self.excluded
    }

    pub fn observed_count(&self) -> usize {
        self.observed_count
    }

    /// Average of the observed energies, `None` if nothing was observed.
    pub fn mean(&self) -> Option<f64> {
        (self.observed_count > 0).then(|| self.observed_sum / self.observed_count as f64)
    }
}

/// Draws at a batch boundary and holds the previous action otherwise.
pub fn brew_select(probs: &[f64], previous: Option<SbsId>, at_boundary: bool, rng: &mut RngStream) -> SbsId {
    match (at_boundary, previous) {
        (false, Some(a)) => a,
        _ => SbsId(rng.categorical(probs)),
    }
}

/// Full-feedback batch update.
pub fn brew_end_batch(acc: &BatchAccumulator, state: &mut WeightState) -> Result<()> {
    let mean = acc.mean().ok_or_else(|| Error::domain("batch ended without any feedback"))?;
    let p = state.probabilities()[acc.chosen.index()];
    let est = importance_estimate(mean, p, acc.chosen, state.n())?;
    state.record(&est)
}

/// Estimate vector of the missing-feedback update, without applying it.
pub fn brew_missing_estimate(acc: &BatchAccumulator, cfg: &MissingFeedbackConfig, probs: &[f64]) -> Result<Vec<f64>> {
    let n = probs.len();
    let Some(mean) = acc.mean() else {
        return Ok(vec![0.0; n]);
    };
    let factor = cfg.observation_probability(acc.eligible().max(acc.observed_count()), acc.observed_count());
    if !(factor > 0.0) {
        return Err(Error::domain("observation pattern has zero probability under the configured miss rate"));
    }
    let p = probs[acc.chosen.index()];
    let mut est = importance_estimate(mean, p, acc.chosen, n)?;
    est[acc.chosen.index()] /= factor;
    Ok(est)
}

/// Missing-feedback batch update. An empty batch leaves the cumulative
/// estimates unchanged but still advances the round.
pub fn brew_missing_end_batch(acc: &BatchAccumulator, cfg: &MissingFeedbackConfig, state: &mut WeightState) -> Result<()> {
    let est = brew_missing_estimate(acc, cfg, state.probabilities())?;
    state.record(&est)
}

/// Slot-level driver for either variant.
#[derive(Debug, Clone)]
pub struct Brew {
    tau: usize,
    horizon: usize,
    weights: WeightState,
    missing: Option<MissingFeedbackConfig>,
    acc: Option<BatchAccumulator>,
    slot: usize,
    batches: usize,
    current: Option<SbsId>,
}

impl Brew {
    pub fn new(cfg: &BrewConfig) -> Result<Self> {
        cfg.validate()?;
        let schedule = cfg.gamma.unwrap_or_else(|| GammaSchedule::anytime(cfg.n_arms));
        Ok(Brew {
            tau: cfg.tau(),
            horizon: cfg.horizon,
            weights: WeightState::new(cfg.n_arms, schedule),
            missing: None,
            acc: None,
            slot: 0,
            batches: 0,
            current: None,
        })
    }

    pub fn with_missing_feedback(cfg: &BrewConfig, missing: MissingFeedbackConfig) -> Result<Self> {
        let mut b = Brew::new(cfg)?;
        b.missing = Some(missing);
        Ok(b)
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn weights(&self) -> &WeightState {
        &self.weights
    }

    pub fn probabilities(&self) -> &[f64] {
        self.weights.probabilities()
    }

    /// Number of batches started so far.
    pub fn batches(&self) -> usize {
        self.batches
    }

    pub fn select(&mut self, rng: &mut RngStream) -> SbsId {
        let boundary = self.acc.is_none();
        let a = brew_select(self.weights.probabilities(), self.current, boundary, rng);
        if boundary {
            self.batches += 1;
            self.acc = Some(BatchAccumulator::new(self.batches, a));
        }
        self.current = Some(a);
        a
    }

    /// Feeds whatever feedback arrived during the slot just played.
    pub fn observe(&mut self, feedback: Option<f64>) -> Result<()> {
        self.finish_slot(|acc| acc.record_slot(feedback))
    }

    /// Closes a slot whose feedback is unusable; it does not count as a
    /// missed observation.
    pub fn observe_excluded(&mut self) -> Result<()> {
        self.finish_slot(BatchAccumulator::record_excluded)
    }

    fn finish_slot(&mut self, record: impl FnOnce(&mut BatchAccumulator)) -> Result<()> {
        let acc = self.acc.as_mut().ok_or_else(|| Error::Protocol("observe called before select".into()))?;
        record(acc);
        self.slot += 1;
        if acc.slots() == self.tau || self.slot == self.horizon {
            let acc = self.acc.take().expect("batch in progress");
            match &self.missing {
                Some(cfg) => brew_missing_end_batch(&acc, cfg, &mut self.weights)?,
                // delayed feedback can leave a batch empty; nothing to learn from it
                None if acc.observed_count() == 0 => {}
                None => brew_end_batch(&acc, &mut self.weights)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_length_oracle_values() {
        // B_N and tau from a 40-digit evaluation of (4.5 N ln N)^(-1/3) T^(1/3)
        assert!((brew_b_n(6) - 0.274_443_011_235_444_9).abs() < 1e-14);
        assert_eq!(brew_batch_length(6, 100_000), 13);
        assert_eq!(brew_batch_length(2, 1), 1);
        assert!((brew_b_n(12) - 0.195_328_397_601_693).abs() < 1e-14);
        assert_eq!(brew_batch_length(12, 100_000), 10);
        assert_eq!(brew_batch_length(2, 1000), 6);
        assert_eq!(brew_batch_length(2, 10_000), 12);
        assert_eq!(brew_batch_length(2, 100_000), 26);
    }

    #[test]
    fn select_holds_mid_batch() {
        let mut rng = RngStream::new(1, 1);
        let before = rng.clone();
        assert_eq!(brew_select(&[0.5, 0.5, 0.0, 0.0], Some(SbsId(3)), false, &mut rng), SbsId(3));
        // no randomness consumed
        let mut a = rng;
        let mut b = before;
        assert_eq!(a.uniform(), b.uniform());
    }

    #[test]
    fn select_point_mass() {
        let mut rng = RngStream::new(9, 0);
        for _ in 0..50 {
            assert_eq!(brew_select(&[1.0, 0.0, 0.0], None, true, &mut rng), SbsId(0));
        }
    }

    #[test]
    fn select_replays_under_seed() {
        let draw = |seed| {
            let mut rng = RngStream::new(seed, 5);
            (0..20).map(|_| brew_select(&[0.5, 0.5], None, true, &mut rng).index()).collect::<Vec<_>>()
        };
        assert_eq!(draw(77), draw(77));
        assert_ne!(draw(77), draw(78));
    }

    #[test]
    fn end_batch_means() {
        let mut acc = BatchAccumulator::new(1, SbsId(0));
        acc.record_slot(Some(0.2));
        acc.record_slot(Some(0.4));
        assert!((acc.mean().unwrap() - 0.3).abs() < 1e-15);

        // handover charge folded into the first slot of a switching batch
        let e_s = 0.2;
        let mut acc = BatchAccumulator::new(2, SbsId(1));
        acc.record_slot(Some(0.2 + e_s));
        acc.record_slot(Some(0.4));
        assert!((acc.mean().unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn end_batch_rejects_empty() {
        let acc = BatchAccumulator::new(1, SbsId(0));
        let mut w = WeightState::new(2, GammaSchedule::constant(1.0));
        assert!(matches!(brew_end_batch(&acc, &mut w), Err(Error::Domain(_))));
    }

    #[test]
    fn two_batch_hand_trace() {
        // Independent scalar evaluation of the batch update, N = 2,
        // gamma = 1, tau = 2. Batch 1 plays arm 0 with energies (0.2, 0.4);
        // batch 2 plays arm 1 with energies (0.6 + 0.1 handover, 0.8).
        let (mut l0, mut l1) = (0.0f64, 0.0f64);
        let (p0, _p1) = (0.5f64, 0.5f64);
        let mean1 = (0.2 + 0.4) / 2.0;
        l0 += mean1 / p0;
        let z = (-l0).exp() + (-l1).exp();
        let (q0, q1) = ((-l0).exp() / z, (-l1).exp() / z);
        let mean2 = (0.7 + 0.8) / 2.0;
        l1 += mean2 / q1;
        let z = (-l0).exp() + (-l1).exp();
        let (r0, r1) = ((-l0).exp() / z, (-l1).exp() / z);

        let mut w = WeightState::new(2, GammaSchedule::constant(1.0));
        let mut acc = BatchAccumulator::new(1, SbsId(0));
        acc.record_slot(Some(0.2));
        acc.record_slot(Some(0.4));
        brew_end_batch(&acc, &mut w).unwrap();
        assert!((w.probabilities()[0] - q0).abs() < 1e-15);
        assert!((w.probabilities()[1] - q1).abs() < 1e-15);
        let mut acc = BatchAccumulator::new(2, SbsId(1));
        acc.record_slot(Some(0.6 + 0.1));
        acc.record_slot(Some(0.8));
        brew_end_batch(&acc, &mut w).unwrap();
        assert!((w.probabilities()[0] - r0).abs() < 1e-14);
        assert!((w.probabilities()[1] - r1).abs() < 1e-14);
        assert!((w.cum_est_loss()[1] - l1).abs() < 1e-12);
    }

    #[test]
    fn missing_factor_example() {
        let cfg = MissingFeedbackConfig::new(0.5).unwrap();
        assert!((cfg.observation_probability(2, 1) - 0.5).abs() < 1e-15);
        let mut acc = BatchAccumulator::new(1, SbsId(1));
        acc.record_slot(None);
        acc.record_slot(Some(0.3));
        let est = brew_missing_estimate(&acc, &cfg, &[0.6, 0.4]).unwrap();
        assert_eq!(est[0], 0.0);
        assert!((est[1] - 0.3 / (0.4 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn missing_empty_batch_is_zero_update() {
        let cfg = MissingFeedbackConfig::new(0.3).unwrap();
        let mut w = WeightState::new(3, GammaSchedule::constant(0.5));
        w.record(&[0.4, 0.0, 0.2]).unwrap();
        let before = w.cum_est_loss().to_vec();
        let mut acc = BatchAccumulator::new(2, SbsId(0));
        for _ in 0..3 {
            acc.record_slot(None);
        }
        brew_missing_end_batch(&acc, &cfg, &mut w).unwrap();
        assert_eq!(w.cum_est_loss(), &before[..]);
        assert_eq!(w.round(), 3);
    }

    #[test]
    fn excluded_slots_are_not_binomial_trials() {
        let cfg = MissingFeedbackConfig::new(0.5).unwrap();
        let mut acc = BatchAccumulator::new(1, SbsId(0));
        acc.record_excluded();
        acc.record_slot(None);
        acc.record_slot(Some(0.4));
        assert_eq!((acc.slots(), acc.eligible()), (3, 2));
        let est = brew_missing_estimate(&acc, &cfg, &[0.5, 0.5]).unwrap();
        assert!((est[0] - 0.4 / (0.5 * 0.5)).abs() < 1e-15);
        // with no losses configured, an excluded slot is not an impossible miss
        let exact = MissingFeedbackConfig::new(0.0).unwrap();
        let mut acc = BatchAccumulator::new(1, SbsId(1));
        acc.record_excluded();
        acc.record_slot(Some(0.2));
        assert!((brew_missing_estimate(&acc, &exact, &[0.5, 0.5]).unwrap()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn missing_config_rejects_certain_loss() {
        assert!(matches!(MissingFeedbackConfig::new(1.0), Err(Error::Config(_))));
    }

    /// Brute-force expectation of the missing-feedback increment: sum over arm
    /// choice and all 2^tau observation patterns, written independently of the
    /// estimator code.
    fn brute_force_missing_expectation(losses: &[[f64; 3]; 2], probs: [f64; 2], p_miss: f64) -> [f64; 2] {
        let tau = 3;
        let mut expect = [0.0; 2];
        for arm in 0..2 {
            for pattern in 0u32..(1 << tau) {
                let observed: Vec<usize> = (0..tau).filter(|s| pattern & (1 << s) != 0).collect();
                let k = observed.len();
                let prob_pattern = (1.0 - p_miss).powi(k as i32) * p_miss.powi((tau - k) as i32);
                if k == 0 {
                    continue;
                }
                let mean: f64 = observed.iter().map(|&s| losses[arm][s]).sum::<f64>() / k as f64;
                let choose = [1.0, 3.0, 3.0, 1.0][k];
                let factor = choose * (1.0 - p_miss).powi(k as i32) * p_miss.powi((tau - k) as i32);
                expect[arm] += probs[arm] * prob_pattern * mean / (probs[arm] * factor);
            }
        }
        expect
    }

    #[test]
    fn missing_estimator_monte_carlo_matches_brute_force() {
        let losses = [[0.2, 0.5, 0.8], [0.9, 0.1, 0.4]];
        let probs = [0.6, 0.4];
        let p_miss = 0.3;
        let cfg = MissingFeedbackConfig::new(p_miss).unwrap();
        let expect = brute_force_missing_expectation(&losses, probs, p_miss);

        let batches = 1_000_000;
        let mut rng = RngStream::new(2718, 1);
        let (mut sum, mut sq) = ([0.0f64; 2], [0.0f64; 2]);
        for b in 0..batches {
            let arm = rng.categorical(&probs);
            let mut acc = BatchAccumulator::new(b + 1, SbsId(arm));
            for s in 0..3 {
                let fb = (!rng.bernoulli(p_miss)).then_some(losses[arm][s]);
                acc.record_slot(fb);
            }
            let est = brew_missing_estimate(&acc, &cfg, &probs).unwrap();
            for i in 0..2 {
                sum[i] += est[i];
                sq[i] += est[i] * est[i];
            }
        }
        for i in 0..2 {
            let mean = sum[i] / batches as f64;
            let se = ((sq[i] / batches as f64 - mean * mean) / batches as f64).sqrt();
            assert!((mean - expect[i]).abs() <= 3.0 * se, "arm {i}: MC {mean} vs exact {} (se {se})", expect[i]);
        }
        // the realized-count estimator tracks the batch total
        assert!((expect[0] - 1.5).abs() < 1e-12);
        assert!((expect[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn actions_change_only_at_batch_starts() {
        let cfg = BrewConfig::new(4, 1000, 0.1).with_batch(7);
        let mut brew = Brew::new(&cfg).unwrap();
        let mut rng = RngStream::new(5, 5);
        let mut actions = Vec::new();
        for t in 0..1000 {
            let a = brew.select(&mut rng);
            actions.push(a);
            brew.observe(Some(((t * 13 + a.index() * 7) % 10) as f64 / 10.0)).unwrap();
        }
        for t in 1..actions.len() {
            if actions[t] != actions[t - 1] {
                assert_eq!(t % 7, 0, "switch inside a batch at slot {}", t + 1);
            }
        }
        let switches = actions.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(switches < 1000usize.div_ceil(7));
        assert_eq!(brew.batches(), 1000usize.div_ceil(7));
    }

    #[test]
    fn unit_batches_reduce_to_loss_based_exp3() {
        // Standalone mixture-free EXP3 on losses, driven by the same stream.
        let n = 3;
        let horizon = 400;
        let loss = |t: usize, a: usize| ((t * 31 + a * 17) % 23) as f64 / 23.0;
        let mut brew = Brew::new(&BrewConfig::new(n, horizon, 0.0).with_batch(1)).unwrap();
        let mut rng_a = RngStream::new(99, 3);
        let mut rng_b = RngStream::new(99, 3);
        let mut cum = vec![0.0; n];
        let mut p = vec![1.0 / n as f64; n];
        for t in 1..=horizon {
            let a = brew.select(&mut rng_a);
            let b = rng_b.categorical(&p);
            assert_eq!(a.index(), b);
            for (x, y) in brew.probabilities().iter().zip(&p) {
                assert!((x - y).abs() < 1e-12);
            }
            brew.observe(Some(loss(t, b))).unwrap();
            cum[b] += loss(t, b) / p[b];
            let g = (2.0 * (n as f64).ln() / (t as f64 * n as f64)).sqrt();
            let min = cum.iter().copied().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = cum.iter().map(|l| (-g * (l - min)).exp()).collect();
            let z: f64 = w.iter().sum();
            p = w.iter().map(|x| x / z).collect();
        }
    }
}
