//! Measurement-driven handover rules and offline reference policies.
//!
//! The threshold rules see the full per-SBS measurement vector each slot,
//! expressed as normalized energy (lower is better).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{AvailableSet, SbsId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroConfig {
    /// Serving energy above which the UE re-measures and hands over.
    pub threshold: f64,
}

impl Default for MacroConfig {
    fn default() -> Self {
        MacroConfig { threshold: 0.10 }
    }
}

impl MacroConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::config(format!("macro threshold must lie in (0,1), got {threshold}")));
        }
        Ok(MacroConfig { threshold })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhoConfig {
    pub macro_cfg: MacroConfig,
    pub window: usize,
    pub max_handover: usize,
    pub freeze_len: usize,
}

impl FhoConfig {
    /// Table defaults (4 handovers out of 20 slots) with the given freeze length.
    pub fn new(freeze_len: usize) -> Self {
        FhoConfig { macro_cfg: MacroConfig::default(), window: 20, max_handover: 4, freeze_len }
    }

    pub fn validate(&self) -> Result<()> {
        MacroConfig::new(self.macro_cfg.threshold)?;
        if self.max_handover == 0 || self.max_handover > self.window {
            return Err(Error::config("FHO needs 1 <= max_handover <= window"));
        }
        Ok(())
    }
}

/// Best available SBS by measured energy; ties go to the smallest index.
pub fn best_available(measurements: &[f64], available: AvailableSet) -> Result<SbsId> {
    available
        .iter()
        .filter(|a| a.index() < measurements.len())
        .min_by(|a, b| measurements[a.index()].total_cmp(&measurements[b.index()]).then(a.cmp(b)))
        .ok_or_else(|| Error::domain("no SBS available"))
}

/// Threshold rule: stay while the serving SBS is on and within the
/// threshold, otherwise hand over to the best SBS that is on.
pub fn macro_step(cfg: &MacroConfig, measurements: &[f64], serving: Option<SbsId>, available: AvailableSet) -> Result<SbsId> {
    match serving {
        Some(s) if available.contains(s) && measurements[s.index()] <= cfg.threshold => Ok(s),
        _ => best_available(measurements, available),
    }
}

/// Slots at which recent handovers happened, plus the freeze deadline.
#[derive(Debug, Clone, Default)]
pub struct FhoState {
    history: VecDeque<usize>,
    frozen_until: usize,
}

impl FhoState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Handovers within the `window` slots ending at `t` (exclusive).
    pub fn handovers_in_window(&self, t: usize, window: usize) -> usize {
        self.history.iter().filter(|&&s| s + window > t).count()
    }

    pub fn is_frozen(&self, t: usize) -> bool {
        t < self.frozen_until
    }
}

/// Threshold rule with frequent-handover protection. A handover forced by
/// the serving SBS switching off always goes through.
pub fn fho_step(
    cfg: &FhoConfig,
    state: &mut FhoState,
    t: usize,
    measurements: &[f64],
    serving: Option<SbsId>,
    available: AvailableSet,
) -> Result<SbsId> {
    let proposal = macro_step(&cfg.macro_cfg, measurements, serving, available)?;
    let Some(s) = serving else { return Ok(proposal) };
    if proposal == s {
        return Ok(s);
    }
    let forced = !available.contains(s);
    let allowed = !state.is_frozen(t) && state.handovers_in_window(t, cfg.window) < cfg.max_handover;
    if !forced && !allowed {
        return Ok(s);
    }
    state.history.push_back(t);
    while state.history.front().is_some_and(|&h| h + cfg.window <= t) {
        state.history.pop_front();
    }
    if state.handovers_in_window(t + 1, cfg.window) >= cfg.max_handover {
        state.frozen_until = t + 1 + cfg.freeze_len;
    }
    Ok(proposal)
}

/// Best SBS that is on, with the handover charge added to every SBS other
/// than the serving one.
pub fn extended_macro_step(measurements: &[f64], serving: Option<SbsId>, available: AvailableSet, handover_cost: f64) -> Result<SbsId> {
    let score = |a: SbsId| measurements[a.index()] + if Some(a) != serving && serving.is_some() { handover_cost } else { 0.0 };
    available
        .iter()
        .filter(|a| a.index() < measurements.len())
        .min_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)))
        .ok_or_else(|| Error::domain("no SBS available"))
}

/// Offline best fixed SBS of a row-major `T x N` matrix: `(argmin, min column sum)`.
pub fn genie_best_fixed(matrix: &[f64], n: usize) -> Result<(SbsId, f64)> {
    if n == 0 || matrix.is_empty() || !matrix.len().is_multiple_of(n) {
        return Err(Error::domain("matrix must be a non-empty T x N row-major array"));
    }
    let sums = column_sums(matrix, n);
    let (best, &e) = sums.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0))).expect("n >= 1");
    Ok((SbsId(best), e))
}

pub fn column_sums(matrix: &[f64], n: usize) -> Vec<f64> {
    let mut sums = vec![0.0; n];
    for row in matrix.chunks_exact(n) {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    sums
}

/// Two-SBS sequence on which the threshold rule gets stuck on the worse SBS.
///
/// With threshold `theta`: slot 1 favors SBS 0; at slot 2 SBS 0 exceeds the
/// threshold and SBS 1 is best; from slot 3 on SBS 0 is better but SBS 1
/// stays under the threshold, so the rule never leaves it.
pub fn stuck_threshold_sequence(horizon: usize, theta: f64) -> Result<Vec<f64>> {
    if horizon < 3 {
        return Err(Error::config("the stuck-threshold sequence needs T >= 3"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::config("theta must lie in (0,1)"));
    }
    let mut m = Vec::with_capacity(2 * horizon);
    m.extend([0.1 * theta, 0.5 * theta]);
    m.extend([(1.0 + theta) / 2.0, 0.5 * theta]);
    for _ in 2..horizon {
        m.extend([0.1 * theta, 0.9 * theta]);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all(n: usize) -> AvailableSet {
        AvailableSet::all(n)
    }

    #[test]
    fn macro_examples() {
        let cfg = MacroConfig::default();
        let m = [0.05, 0.2, 0.3, 0.4, 0.01, 0.5];
        assert_eq!(macro_step(&cfg, &m, Some(SbsId(0)), all(6)).unwrap(), SbsId(0));
        let m = [0.15, 0.2, 0.3, 0.4, 0.01, 0.5];
        assert_eq!(macro_step(&cfg, &m, Some(SbsId(0)), all(6)).unwrap(), SbsId(4));
        assert_eq!(macro_step(&cfg, &m, None, all(6)).unwrap(), SbsId(4));
    }

    #[test]
    fn macro_leaves_an_off_serving_sbs() {
        let cfg = MacroConfig::default();
        let m = [0.01, 0.5, 0.3];
        let avail = AvailableSet::from_ids([1, 2]);
        assert_eq!(macro_step(&cfg, &m, Some(SbsId(0)), avail).unwrap(), SbsId(2));
    }

    #[test]
    fn macro_stuck_on_the_worse_sbs() {
        let theta = 0.5;
        let m = stuck_threshold_sequence(50, theta).unwrap();
        let cfg = MacroConfig::new(theta).unwrap();
        let mut serving = None;
        let mut actions = vec![];
        for row in m.chunks_exact(2) {
            let a = macro_step(&cfg, row, serving, all(2)).unwrap();
            actions.push(a);
            serving = Some(a);
        }
        assert_eq!(actions[0], SbsId(0));
        assert!(actions[1..].iter().all(|&a| a == SbsId(1)));
        assert_eq!(genie_best_fixed(&m, 2).unwrap().0, SbsId(0));
    }

    #[test]
    fn fho_empty_history_matches_macro() {
        let cfg = FhoConfig::new(13);
        let mut st = FhoState::new();
        let m = [0.15, 0.2, 0.01];
        let macro_a = macro_step(&cfg.macro_cfg, &m, Some(SbsId(0)), all(3)).unwrap();
        assert_eq!(fho_step(&cfg, &mut st, 1, &m, Some(SbsId(0)), all(3)).unwrap(), macro_a);
    }

    #[test]
    fn fho_freezes_after_four_handovers() {
        let cfg = FhoConfig::new(13);
        let mut st = FhoState::new();
        // Measurements alternate so the threshold rule wants to switch every slot.
        let rows = [[0.5, 0.05], [0.05, 0.5]];
        let mut serving = Some(SbsId(0));
        let mut switches = vec![];
        for t in 1..=40 {
            let a = fho_step(&cfg, &mut st, t, &rows[t % 2], serving, all(2)).unwrap();
            if Some(a) != serving {
                switches.push(t);
            }
            serving = Some(a);
        }
        // Slot 1 already favors the serving SBS.
        assert_eq!(&switches[..4], &[2, 3, 4, 5]);
        // Frozen for slots 6..=18, then the window still holds 4 until slot 22.
        assert_eq!(switches[4], 22);
        for w in switches.windows(5) {
            assert!(w[4] - w[0] >= 20, "five handovers within 20 slots: {w:?}");
        }
    }

    #[test]
    fn fho_holds_during_freeze() {
        let cfg = FhoConfig::new(5);
        let mut st = FhoState::new();
        for t in 0..4 {
            st.history.push_back(t);
        }
        st.frozen_until = 10;
        let m = [0.9, 0.01];
        assert_eq!(fho_step(&cfg, &mut st, 6, &m, Some(SbsId(0)), all(2)).unwrap(), SbsId(0));
    }

    #[test]
    fn extended_macro_charges_handover() {
        let m = [0.30, 0.25];
        assert_eq!(extended_macro_step(&m, Some(SbsId(0)), all(2), 0.1).unwrap(), SbsId(0));
        assert_eq!(extended_macro_step(&m, Some(SbsId(0)), all(2), 0.01).unwrap(), SbsId(1));
        assert_eq!(extended_macro_step(&m, Some(SbsId(0)), AvailableSet::from_ids([1]), 0.1).unwrap(), SbsId(1));
    }

    #[test]
    fn genie_examples() {
        let t = 7;
        let m: Vec<f64> = (0..t).flat_map(|_| [0.2, 0.5]).collect();
        let (a, e) = genie_best_fixed(&m, 2).unwrap();
        assert_eq!(a, SbsId(0));
        assert!((e - 0.2 * t as f64).abs() < 1e-12);
        let m = vec![0.3; 12];
        assert_eq!(genie_best_fixed(&m, 3).unwrap().0, SbsId(0));
    }

    proptest! {
        #[test]
        fn genie_matches_exhaustive_scan(m in prop::collection::vec(0.0f64..1.0, 30)) {
            let (a, e) = genie_best_fixed(&m, 3).unwrap();
            for col in 0..3 {
                let s: f64 = (0..10).map(|r| m[r * 3 + col]).sum();
                prop_assert!(e <= s + 1e-12);
                if col == a.index() {
                    prop_assert!((s - e).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn macro_is_stationary_below_threshold(m in prop::collection::vec(0.0f64..0.1, 4), s in 0usize..4) {
            let cfg = MacroConfig::default();
            let mut serving = Some(SbsId(s));
            for _ in 0..20 {
                let a = macro_step(&cfg, &m, serving, AvailableSet::all(4)).unwrap();
                prop_assert_eq!(Some(a), serving);
                serving = Some(a);
            }
        }

        #[test]
        fn fho_window_cap(rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 200)) {
            let cfg = FhoConfig::new(3);
            let mut st = FhoState::new();
            let mut serving = None;
            let mut switches = vec![];
            for (t, row) in rows.iter().enumerate() {
                let a = fho_step(&cfg, &mut st, t + 1, row, serving, AvailableSet::all(3)).unwrap();
                if serving.is_some() && Some(a) != serving {
                    switches.push(t + 1);
                }
                serving = Some(a);
            }
            for w in switches.windows(5) {
                prop_assert!(w[4] - w[0] >= 20);
            }
        }
    }
}
