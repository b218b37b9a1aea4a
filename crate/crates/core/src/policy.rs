//! Slot-level policy interface and adapters for every algorithm.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::baselines::{extended_macro_step, fho_step, macro_step, FhoConfig, FhoState, MacroConfig};
use crate::brew::{Brew, BrewConfig, MissingFeedbackConfig};
use crate::env::{Feedback, Scenario};
use crate::error::{Error, Result};
use crate::ew::GammaSchedule;
use crate::experts::{ContextualRankingExpert, ExpertMode, RankingExpertLearner};
use crate::model::{AvailableSet, SbsId};
use crate::rng::RngStream;

/// What a policy may look at before choosing the SBS for slot `t`.
#[derive(Debug, Clone, Copy)]
pub struct SlotView<'a> {
    pub t: usize,
    pub available: AvailableSet,
    /// Action of slot `t - 1`; at `t = 1` the initial association.
    pub previous: SbsId,
    /// Measured per-SBS energies, for the measurement-driven rules.
    pub measurements: Option<&'a [f64]>,
}

pub trait Policy: Send {
    fn select(&mut self, view: &SlotView<'_>, rng: &mut RngStream) -> Result<SbsId>;

    /// Called once per slot with whatever feedback arrived during it.
    fn observe(&mut self, t: usize, delivered: &[Feedback]) -> Result<()>;
}

fn uniform_available(available: AvailableSet, rng: &mut RngStream) -> SbsId {
    available.nth(rng.index(available.len())).expect("non-empty availability")
}

/// Batched exponential weights. If the held SBS is off, a uniformly drawn
/// SBS that is on substitutes for that slot and its feedback is ignored.
pub struct BrewPolicy {
    brew: Brew,
    substituted: VecDeque<(usize, bool)>,
    last_substituted: bool,
}

impl BrewPolicy {
    pub fn new(brew: Brew) -> Self {
        BrewPolicy { brew, substituted: VecDeque::new(), last_substituted: false }
    }

    pub fn inner(&self) -> &Brew {
        &self.brew
    }
}

impl Policy for BrewPolicy {
    fn select(&mut self, view: &SlotView<'_>, rng: &mut RngStream) -> Result<SbsId> {
        let a = self.brew.select(rng);
        let sub = !view.available.contains(a);
        self.substituted.push_back((view.t, sub));
        self.last_substituted = sub;
        Ok(if sub { uniform_available(view.available, rng) } else { a })
    }

    fn observe(&mut self, _t: usize, delivered: &[Feedback]) -> Result<()> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for f in delivered {
            while self.substituted.front().is_some_and(|&(s, _)| s < f.slot) {
                self.substituted.pop_front();
            }
            let sub = self.substituted.front().is_some_and(|&(s, sub)| s == f.slot && sub);
            if !sub {
                sum += f.value;
                count += 1;
            }
        }
        if count == 0 && self.last_substituted {
            return self.brew.observe_excluded();
        }
        self.brew.observe((count > 0).then(|| sum / count as f64))
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingDraw {
    slot: usize,
    context: SbsId,
    available: AvailableSet,
    executed: SbsId,
    p_executed: f64,
}

/// Matches delivered feedback to the draw that produced it.
#[derive(Debug, Default)]
struct DrawBook {
    pending: VecDeque<PendingDraw>,
}

impl DrawBook {
    fn push(&mut self, d: PendingDraw) {
        self.pending.push_back(d);
    }

    fn take(&mut self, slot: usize) -> Option<PendingDraw> {
        while self.pending.front().is_some_and(|d| d.slot < slot) {
            self.pending.pop_front();
        }
        if self.pending.front().is_some_and(|d| d.slot == slot) {
            self.pending.pop_front()
        } else {
            None
        }
    }
}

pub struct RankingExpertPolicy {
    learner: RankingExpertLearner,
    book: DrawBook,
}

impl RankingExpertPolicy {
    pub fn new(learner: RankingExpertLearner) -> Self {
        RankingExpertPolicy { learner, book: DrawBook::default() }
    }

    pub fn learner(&self) -> &RankingExpertLearner {
        &self.learner
    }
}

impl Policy for RankingExpertPolicy {
    fn select(&mut self, view: &SlotView<'_>, rng: &mut RngStream) -> Result<SbsId> {
        let d = self.learner.step(view.previous, view.available, rng)?;
        let p_executed = d.p_executed();
        self.book.push(PendingDraw { slot: view.t, context: view.previous, available: view.available, executed: d.executed, p_executed });
        Ok(d.executed)
    }

    fn observe(&mut self, _t: usize, delivered: &[Feedback]) -> Result<()> {
        for f in delivered {
            if let Some(d) = self.book.take(f.slot) {
                self.learner.update(d.context, d.available, d.executed, d.p_executed, f.value)?;
            }
        }
        Ok(())
    }
}

pub struct ContextualPolicy {
    learner: ContextualRankingExpert,
    book: DrawBook,
}

impl ContextualPolicy {
    pub fn new(learner: ContextualRankingExpert) -> Self {
        ContextualPolicy { learner, book: DrawBook::default() }
    }

    pub fn learner(&self) -> &ContextualRankingExpert {
        &self.learner
    }
}

impl Policy for ContextualPolicy {
    fn select(&mut self, view: &SlotView<'_>, rng: &mut RngStream) -> Result<SbsId> {
        let d = self.learner.step(view.previous, view.available, rng)?;
        let p_executed = d.p_executed();
        self.book.push(PendingDraw { slot: view.t, context: view.previous, available: view.available, executed: d.executed, p_executed });
        Ok(d.executed)
    }

    fn observe(&mut self, _t: usize, delivered: &[Feedback]) -> Result<()> {
        for f in delivered {
            if let Some(d) = self.book.take(f.slot) {
                self.learner.update(d.context, d.available, d.executed, d.p_executed, f.value)?;
            }
        }
        Ok(())
    }
}

fn serving(view: &SlotView<'_>) -> Option<SbsId> {
    (view.t > 1).then_some(view.previous)
}

/// Before any measurement arrives the rules stay put, or take the lowest-index SBS that is on.
fn unmeasured(view: &SlotView<'_>) -> SbsId {
    match serving(view) {
        Some(s) if view.available.contains(s) => s,
        _ => view.available.iter().next().expect("non-empty availability"),
    }
}

pub struct MacroPolicy {
    cfg: MacroConfig,
}

impl Policy for MacroPolicy {
    fn select(&mut self, view: &SlotView<'_>, _rng: &mut RngStream) -> Result<SbsId> {
        match view.measurements {
            Some(m) => macro_step(&self.cfg, m, serving(view), view.available),
            None => Ok(unmeasured(view)),
        }
    }

    fn observe(&mut self, _t: usize, _delivered: &[Feedback]) -> Result<()> {
        Ok(())
    }
}

pub struct FhoPolicy {
    cfg: FhoConfig,
    state: FhoState,
}

impl Policy for FhoPolicy {
    fn select(&mut self, view: &SlotView<'_>, _rng: &mut RngStream) -> Result<SbsId> {
        match view.measurements {
            Some(m) => fho_step(&self.cfg, &mut self.state, view.t, m, serving(view), view.available),
            None => Ok(unmeasured(view)),
        }
    }

    fn observe(&mut self, _t: usize, _delivered: &[Feedback]) -> Result<()> {
        Ok(())
    }
}

pub struct ExtendedMacroPolicy {
    handover_cost: f64,
}

impl Policy for ExtendedMacroPolicy {
    fn select(&mut self, view: &SlotView<'_>, _rng: &mut RngStream) -> Result<SbsId> {
        match view.measurements {
            Some(m) => extended_macro_step(m, serving(view), view.available, self.handover_cost),
            None => Ok(unmeasured(view)),
        }
    }

    fn observe(&mut self, _t: usize, _delivered: &[Feedback]) -> Result<()> {
        Ok(())
    }
}

/// Always the same SBS; the lowest-index SBS that is on when it is off.
pub struct FixedPolicy {
    arm: SbsId,
}

impl Policy for FixedPolicy {
    fn select(&mut self, view: &SlotView<'_>, _rng: &mut RngStream) -> Result<SbsId> {
        if view.available.contains(self.arm) {
            Ok(self.arm)
        } else {
            Ok(view.available.iter().next().expect("non-empty availability"))
        }
    }

    fn observe(&mut self, _t: usize, _delivered: &[Feedback]) -> Result<()> {
        Ok(())
    }
}

/// Algorithm selection as written on the command line: `name[:key=value,...]`.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgoSpec {
    Brew { tau: Option<usize>, gamma: Option<f64> },
    BrewMissing { p: Option<f64>, tau: Option<usize> },
    Re { mode: ExpertMode },
    Cre,
    Macro { threshold: f64 },
    Fho { threshold: f64, window: usize, max_handover: usize, freeze: Option<usize> },
    ExtendedMacro,
    Fixed { arm: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoFamily {
    Brew,
    Re,
    Cre,
    Baseline,
}

impl AlgoSpec {
    pub fn family(&self) -> AlgoFamily {
        match self {
            AlgoSpec::Brew { .. } | AlgoSpec::BrewMissing { .. } => AlgoFamily::Brew,
            AlgoSpec::Re { .. } => AlgoFamily::Re,
            AlgoSpec::Cre => AlgoFamily::Cre,
            _ => AlgoFamily::Baseline,
        }
    }

    /// Builds a fresh instance for one repetition.
    pub fn build(&self, scenario: &Scenario, horizon: usize) -> Result<Box<dyn Policy>> {
        let n = scenario.n_sbs;
        let e_s = scenario.handover_cost;
        let brew_cfg = |tau: Option<usize>| {
            let cfg = BrewConfig::new(n, horizon, e_s);
            match tau {
                Some(t) => cfg.with_batch(t),
                None => cfg,
            }
        };
        Ok(match self {
            AlgoSpec::Brew { tau, gamma } => {
                let mut cfg = brew_cfg(*tau);
                if let Some(g) = gamma {
                    cfg = cfg.with_gamma(GammaSchedule::constant(*g));
                }
                Box::new(BrewPolicy::new(Brew::new(&cfg)?))
            }
            AlgoSpec::BrewMissing { p, tau } => {
                let miss = MissingFeedbackConfig::new(p.unwrap_or(scenario.channel.p_miss))?;
                Box::new(BrewPolicy::new(Brew::with_missing_feedback(&brew_cfg(*tau), miss)?))
            }
            AlgoSpec::Re { mode } => Box::new(RankingExpertPolicy::new(RankingExpertLearner::new(n, *mode)?)),
            AlgoSpec::Cre => Box::new(ContextualPolicy::new(ContextualRankingExpert::new(n)?)),
            AlgoSpec::Macro { threshold } => Box::new(MacroPolicy { cfg: MacroConfig::new(*threshold)? }),
            AlgoSpec::Fho { threshold, window, max_handover, freeze } => {
                let freeze_len = freeze.unwrap_or_else(|| brew_cfg(None).tau());
                let cfg = FhoConfig { macro_cfg: MacroConfig::new(*threshold)?, window: *window, max_handover: *max_handover, freeze_len };
                cfg.validate()?;
                Box::new(FhoPolicy { cfg, state: FhoState::new() })
            }
            AlgoSpec::ExtendedMacro => Box::new(ExtendedMacroPolicy { handover_cost: e_s }),
            AlgoSpec::Fixed { arm } => {
                if *arm >= n {
                    return Err(Error::config(format!("fixed arm {arm} outside 0..{n}")));
                }
                Box::new(FixedPolicy { arm: SbsId(*arm) })
            }
        })
    }
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params: Vec<String> = Vec::new();
        let name = match self {
            AlgoSpec::Brew { tau, gamma } => {
                params.extend(tau.map(|t| format!("tau={t}")));
                params.extend(gamma.map(|g| format!("gamma={g}")));
                "brew"
            }
            AlgoSpec::BrewMissing { p, tau } => {
                params.extend(p.map(|p| format!("p={p}")));
                params.extend(tau.map(|t| format!("tau={t}")));
                "brew-missing"
            }
            AlgoSpec::Re { mode: ExpertMode::Factored } => "re",
            AlgoSpec::Re { mode: ExpertMode::Naive } => "re-naive",
            AlgoSpec::Cre => "cre",
            AlgoSpec::Macro { threshold } => {
                if *threshold != MacroConfig::default().threshold {
                    params.push(format!("threshold={threshold}"));
                }
                "macro"
            }
            AlgoSpec::Fho { threshold, window, max_handover, freeze } => {
                if *threshold != MacroConfig::default().threshold {
                    params.push(format!("threshold={threshold}"));
                }
                if *window != 20 {
                    params.push(format!("window={window}"));
                }
                if *max_handover != 4 {
                    params.push(format!("max={max_handover}"));
                }
                params.extend(freeze.map(|z| format!("freeze={z}")));
                "fho"
            }
            AlgoSpec::ExtendedMacro => "ext-macro",
            AlgoSpec::Fixed { arm } => {
                params.push(format!("arm={arm}"));
                "fixed"
            }
        };
        if params.is_empty() {
            write!(f, "{name}")
        } else {
            write!(f, "{name}:{}", params.join(","))
        }
    }
}

impl FromStr for AlgoSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv: Vec<(&str, &str)> = Vec::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::config(format!("algorithm parameter {part:?} is not key=value")))?;
            kv.push((k.trim(), v.trim()));
        }
        let mut take = |key: &str| -> Option<&str> {
            let i = kv.iter().position(|(k, _)| *k == key)?;
            Some(kv.remove(i).1)
        };
        fn num<T: FromStr>(key: &str, v: Option<&str>) -> Result<Option<T>> {
            v.map(|v| v.parse::<T>().map_err(|_| Error::config(format!("bad value {v:?} for {key}")))).transpose()
        }
        let default_threshold = MacroConfig::default().threshold;
        let spec = match name.trim() {
            "brew" => AlgoSpec::Brew { tau: num("tau", take("tau"))?, gamma: num("gamma", take("gamma"))? },
            "brew-missing" => AlgoSpec::BrewMissing { p: num("p", take("p"))?, tau: num("tau", take("tau"))? },
            "re" => AlgoSpec::Re { mode: ExpertMode::Factored },
            "re-naive" => AlgoSpec::Re { mode: ExpertMode::Naive },
            "cre" => AlgoSpec::Cre,
            "macro" => AlgoSpec::Macro { threshold: num("threshold", take("threshold"))?.unwrap_or(default_threshold) },
            "fho" => AlgoSpec::Fho {
                threshold: num("threshold", take("threshold"))?.unwrap_or(default_threshold),
                window: num("window", take("window"))?.unwrap_or(20),
                max_handover: num("max", take("max"))?.unwrap_or(4),
                freeze: num("freeze", take("freeze"))?,
            },
            "ext-macro" => AlgoSpec::ExtendedMacro,
            "fixed" => AlgoSpec::Fixed { arm: num("arm", take("arm"))?.ok_or_else(|| Error::config("fixed needs arm=<index>"))? },
            other => return Err(Error::config(format!("unknown algorithm {other:?}"))),
        };
        if let Some((k, _)) = kv.first() {
            return Err(Error::config(format!("unknown parameter {k:?} for {name}")));
        }
        Ok(spec)
    }
}
