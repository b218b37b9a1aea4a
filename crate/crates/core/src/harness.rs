//! Experiment runner and regret bookkeeping.
//!
//! Every (algorithm, repetition) pair runs on its own worker with its own
//! policy and environment. The loss matrix is shared and realized once per
//! experiment; the availability and feedback-loss streams depend on the
//! repetition only, so all algorithms of one repetition face the same draws.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::baselines::genie_best_fixed;
use crate::brew::brew_b_n;
use crate::env::{Environment, Scenario};
use crate::error::{Error, Result};
use crate::experts::{factorial, RecommendationTable};
use crate::model::{AvailableSet, SbsId};
use crate::policy::{AlgoFamily, AlgoSpec, SlotView};
use crate::rng::{label, stream_id, RngStream};

/// Largest replayable expert pool.
pub const MAX_REPLAY_POOL: usize = 5040;

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: String,
    pub scenario: Scenario,
    pub algos: Vec<AlgoSpec>,
    pub horizon: usize,
    pub reps: usize,
    pub seed: u64,
    /// Record one trace row every `stride` slots (and at the horizon).
    pub stride: usize,
}

impl ExperimentSpec {
    pub fn new(id: impl Into<String>, scenario: Scenario, algos: Vec<AlgoSpec>, horizon: usize) -> Self {
        ExperimentSpec { id: id.into(), scenario, algos, horizon, reps: 20, seed: 1, stride: 100 }
    }

    pub fn reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.algos.is_empty() {
            return Err(Error::config("no algorithms given"));
        }
        if self.reps == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.horizon == 0 || self.stride == 0 {
            return Err(Error::config("horizon and stride must be at least 1"));
        }
        Ok(())
    }
}

/// Everything that happened in one run, slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Association before slot 1, used as the first context.
    pub initial: SbsId,
    pub actions: Vec<SbsId>,
    pub service: Vec<f64>,
    pub switched: Vec<bool>,
    pub availability: Vec<AvailableSet>,
    pub handover_cost: f64,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn handovers(&self) -> usize {
        self.switched.iter().filter(|&&s| s).count()
    }

    pub fn service_cost(&self) -> f64 {
        self.service.iter().sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.service_cost() + self.handover_cost * self.handovers() as f64
    }
}

pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    stream_id(&[seed, rep as u64])
}

/// Plays one algorithm through one repetition.
pub fn run_policy(algo: &AlgoSpec, scenario: &Scenario, matrix: Arc<Vec<f64>>, horizon: usize, seed: u64, rep: usize) -> Result<RunRecord> {
    let mut env = Environment::new(scenario, matrix, horizon, repetition_seed(seed, rep))?;
    let mut policy = algo.build(scenario, horizon)?;
    let mut rng = RngStream::new(seed, stream_id(&[label("policy"), label(&algo.to_string()), rep as u64]));
    let initial = SbsId(rng.index(scenario.n_sbs));
    let mut rec = RunRecord {
        initial,
        actions: Vec::with_capacity(horizon),
        service: Vec::with_capacity(horizon),
        switched: Vec::with_capacity(horizon),
        availability: Vec::with_capacity(horizon),
        handover_cost: scenario.handover_cost,
    };
    let mut previous = initial;
    while !env.is_done() {
        let view = SlotView { t: env.slot(), available: env.available(), previous, measurements: env.measurements() };
        let a = policy.select(&view, &mut rng)?;
        rec.availability.push(view.available);
        let out = env.step(a)?;
        policy.observe(out.t, &out.delivered)?;
        rec.actions.push(a);
        rec.service.push(out.cost.service);
        rec.switched.push(out.cost.switched);
        previous = a;
    }
    Ok(rec)
}

/// Learner total cost minus the best fixed SBS's service cost.
pub fn fixed_action_regret(rec: &RunRecord, matrix: &[f64], n: usize) -> Result<f64> {
    let t = rec.horizon();
    let (_, e_best) = genie_best_fixed(&matrix[..t * n], n)?;
    Ok(rec.total_cost() - e_best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpertPool {
    /// The `N!` single-ranking experts.
    BasicRankings,
    /// All `(N!)^N` experts holding one ranking per previous action.
    RankingExperts,
}

impl ExpertPool {
    pub fn size(self, n: usize) -> Option<usize> {
        let r = factorial(n);
        match self {
            ExpertPool::BasicRankings => Some(r),
            ExpertPool::RankingExperts => (0..n).try_fold(1usize, |acc, _| acc.checked_mul(r)),
        }
    }
}

/// Costs of every expert in the pool replayed on the recorded availability,
/// each following its own trajectory from the learner's initial association.
pub fn replay_expert_costs(rec: &RunRecord, matrix: &[f64], n: usize, pool: ExpertPool) -> Result<Vec<f64>> {
    let size = pool.size(n).filter(|&s| s <= MAX_REPLAY_POOL).ok_or_else(|| {
        Error::config(format!("expert pool too large to replay for N = {n}; use the factored learner and basic-ranking regret"))
    })?;
    let table = RecommendationTable::new(n)?;
    let r = table.len();
    let e_s = rec.handover_cost;
    let costs = (0..size)
        .map(|e| {
            let mut prev = rec.initial.index();
            let mut cost = 0.0;
            for (i, &avail) in rec.availability.iter().enumerate() {
                let ranking = match pool {
                    ExpertPool::BasicRankings => e,
                    ExpertPool::RankingExperts => (e / r.pow(prev as u32)) % r,
                };
                let a = table.recommend(ranking, avail);
                cost += matrix[i * n + a];
                if i > 0 && a != prev {
                    cost += e_s;
                }
                prev = a;
            }
            cost
        })
        .collect();
    Ok(costs)
}

/// Learner total cost minus the cheapest expert of the pool.
pub fn expert_regret(rec: &RunRecord, matrix: &[f64], n: usize, pool: ExpertPool) -> Result<f64> {
    let costs = replay_expert_costs(rec, matrix, n, pool)?;
    Ok(rec.total_cost() - costs.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Sum over previous-action contexts `b` of the learner's cost on the slots
/// following `b` minus the best single ranking's cost on those slots, both
/// charged a handover whenever the action differs from `b` (from slot 2 on).
pub fn contextual_regret(rec: &RunRecord, matrix: &[f64], n: usize) -> Result<f64> {
    let table = RecommendationTable::new(n)?;
    let r = table.len();
    let e_s = rec.handover_cost;
    let mut learner = vec![0.0; n];
    let mut experts = vec![0.0; n * r];
    let mut prev = rec.initial.index();
    for (i, (&a, &avail)) in rec.actions.iter().zip(&rec.availability).enumerate() {
        let b = prev;
        let charge = |x: usize| if i > 0 && x != b { e_s } else { 0.0 };
        learner[b] += matrix[i * n + a.index()] + charge(a.index());
        for s in 0..r {
            let x = table.recommend(s, avail);
            experts[b * r + s] += matrix[i * n + x] + charge(x);
        }
        prev = a.index();
    }
    Ok((0..n).map(|b| learner[b] - experts[b * r..(b + 1) * r].iter().copied().fold(f64::INFINITY, f64::min)).sum())
}

/// Outcome of the forced-handover check for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedHandoverCheck {
    pub handovers: usize,
    pub learner_cost: f64,
    /// Cheapest single-ranking expert on the same availability.
    pub best_ranking_cost: f64,
    pub regret: f64,
    /// `T * E_max / N`.
    pub lower_bound: f64,
    /// `T (1 - 1/N) E_max + T/N`.
    pub comparator_bound: f64,
}

impl ForcedHandoverCheck {
    pub fn pass(&self, horizon: usize) -> bool {
        self.handovers + 1 == horizon && self.regret >= self.lower_bound
    }
}

pub fn forced_handover_check(rec: &RunRecord, matrix: &[f64], n: usize, e_max: f64) -> Result<ForcedHandoverCheck> {
    let costs = replay_expert_costs(rec, matrix, n, ExpertPool::BasicRankings)?;
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let t = rec.horizon() as f64;
    let nf = n as f64;
    Ok(ForcedHandoverCheck {
        handovers: rec.handovers(),
        learner_cost: rec.total_cost(),
        best_ranking_cost: best,
        regret: rec.total_cost() - best,
        lower_bound: t * e_max / nf,
        comparator_bound: t * (1.0 - 1.0 / nf) * e_max + t / nf,
    })
}

/// One recorded slot of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub action: SbsId,
    pub service_energy: f64,
    pub switched: bool,
    pub cum_cost: f64,
    /// Best fixed SBS's service cost over slots `1..=t`; absent under adaptive availability.
    pub e_best_prefix: Option<f64>,
    pub per_slot_regret: Option<f64>,
}

pub fn trace_rows(rec: &RunRecord, matrix: &[f64], n: usize, stride: usize, fixed_regret: bool) -> Vec<TraceRow> {
    let mut cols = vec![0.0; n];
    let mut cum = 0.0;
    let mut rows = Vec::new();
    let horizon = rec.horizon();
    for i in 0..horizon {
        for (c, v) in cols.iter_mut().zip(&matrix[i * n..(i + 1) * n]) {
            *c += v;
        }
        cum += rec.service[i] + if rec.switched[i] { rec.handover_cost } else { 0.0 };
        let t = i + 1;
        if t % stride == 0 || t == horizon {
            let best = fixed_regret.then(|| cols.iter().copied().fold(f64::INFINITY, f64::min));
            rows.push(TraceRow {
                t,
                action: rec.actions[i],
                service_energy: rec.service[i],
                switched: rec.switched[i],
                cum_cost: cum,
                e_best_prefix: best,
                per_slot_regret: best.map(|b| (cum - b) / t as f64),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegretBound {
    /// Batched learner, immediate feedback.
    Brew { n: usize, horizon: usize },
    /// Batched learner, feedback delayed by `d` slots.
    DelayedBrew { n: usize, horizon: usize, d: usize },
    /// Ranking-expert learner against the full ranking-expert pool.
    RankingExpert { n: usize, horizon: usize },
    /// Contextual learner, contextual regret.
    Contextual { n: usize, horizon: usize },
}

impl RegretBound {
    pub fn id(&self) -> &'static str {
        match self {
            RegretBound::Brew { .. } => "brew",
            RegretBound::DelayedBrew { .. } => "delayed-brew",
            RegretBound::RankingExpert { .. } => "ranking-expert",
            RegretBound::Contextual { .. } => "contextual",
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            RegretBound::Brew { n, horizon } => brew_regret_bound(n, horizon),
            RegretBound::DelayedBrew { n, horizon, d } => delayed_brew_regret_bound(n, horizon, d),
            RegretBound::RankingExpert { n, horizon } => ranking_expert_regret_bound(n, horizon),
            RegretBound::Contextual { n, horizon } => contextual_regret_bound(n, horizon),
        }
    }
}

impl fmt::Display for RegretBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// `2/B T^{2/3} + (B + B^{-2}) T^{1/3} + 1` with `B = (4.5 N ln N)^{-1/3}`.
pub fn brew_regret_bound(n: usize, horizon: usize) -> f64 {
    delayed_brew_regret_bound(n, horizon, 1)
}

/// `(d+1)/B T^{2/3} + (B + B^{-2}) T^{1/3} + 1`.
pub fn delayed_brew_regret_bound(n: usize, horizon: usize, d: usize) -> f64 {
    let b = brew_b_n(n);
    let t = horizon as f64;
    (d as f64 + 1.0) / b * t.powf(2.0 / 3.0) + (b + b.powi(-2)) * t.cbrt() + 1.0
}

/// `2 N sqrt(T N ln N)`.
pub fn ranking_expert_regret_bound(n: usize, horizon: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf * (horizon as f64 * nf * nf.ln()).sqrt()
}

/// `2 N^2 sqrt(T ln N)`.
pub fn contextual_regret_bound(n: usize, horizon: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf * nf * (horizon as f64 * nf.ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub kind: RegretBound,
    pub bound: f64,
    pub measured: f64,
    /// `bound - measured`.
    pub margin: f64,
    pub pass: bool,
}

pub fn check_bound(kind: RegretBound, measured: f64) -> BoundCheck {
    let bound = kind.bound();
    BoundCheck { kind, bound, measured, margin: bound - measured, pass: measured <= bound }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegretKind {
    FixedAction,
    Expert(ExpertPool),
    Contextual,
}

impl RegretKind {
    /// The regret notion reported for an algorithm in a scenario.
    pub fn for_algo(algo: &AlgoSpec, scenario: &Scenario) -> Self {
        let n = scenario.n_sbs;
        let full_ok = ExpertPool::RankingExperts.size(n).is_some_and(|s| s <= MAX_REPLAY_POOL);
        match algo.family() {
            AlgoFamily::Re if full_ok => RegretKind::Expert(ExpertPool::RankingExperts),
            AlgoFamily::Re => RegretKind::Expert(ExpertPool::BasicRankings),
            AlgoFamily::Cre if !scenario.is_adaptive() => RegretKind::Contextual,
            _ if scenario.is_adaptive() => RegretKind::Expert(ExpertPool::BasicRankings),
            _ => RegretKind::FixedAction,
        }
    }

    pub fn measure(self, rec: &RunRecord, matrix: &[f64], n: usize) -> Result<f64> {
        match self {
            RegretKind::FixedAction => fixed_action_regret(rec, matrix, n),
            RegretKind::Expert(pool) => expert_regret(rec, matrix, n, pool),
            RegretKind::Contextual => contextual_regret(rec, matrix, n),
        }
    }
}

/// The regret bound that applies to an algorithm in a scenario, if any.
pub fn applicable_bound(algo: &AlgoSpec, scenario: &Scenario, horizon: usize) -> Option<RegretBound> {
    use crate::env::AvailabilitySpec;
    let n = scenario.n_sbs;
    if n < 2 {
        return None;
    }
    match (algo, RegretKind::for_algo(algo, scenario)) {
        (AlgoSpec::Brew { tau: None, gamma: None }, RegretKind::FixedAction)
            if scenario.availability == AvailabilitySpec::AlwaysOn && scenario.channel.p_miss == 0.0 =>
        {
            Some(match scenario.channel.delay {
                0 => RegretBound::Brew { n, horizon },
                d => RegretBound::DelayedBrew { n, horizon, d },
            })
        }
        (AlgoSpec::Re { .. }, RegretKind::Expert(ExpertPool::RankingExperts)) if scenario.channel == Default::default() => {
            Some(RegretBound::RankingExpert { n, horizon })
        }
        (AlgoSpec::Cre, RegretKind::Contextual) if scenario.channel == Default::default() => Some(RegretBound::Contextual { n, horizon }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rep: usize,
    pub seed: u64,
    pub total_cost: f64,
    pub handovers: usize,
    pub regret: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub mean_cum_cost: f64,
    pub mean_per_slot_regret: Option<f64>,
    pub se_per_slot_regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoResult {
    pub label: String,
    pub regret_kind: RegretKind,
    pub runs: Vec<RunOutput>,
    pub mean_regret: f64,
    pub se: f64,
    pub bound: Option<BoundCheck>,
    pub curve: Vec<CurvePoint>,
}

impl AlgoResult {
    pub fn mean_total_cost(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.total_cost))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: String,
    pub horizon: usize,
    pub reps: usize,
    pub algos: Vec<AlgoResult>,
}

impl ExperimentResult {
    pub fn algo(&self, label: &str) -> Option<&AlgoResult> {
        self.algos.iter().find(|a| a.label == label)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs.iter().copied());
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Runs every algorithm for every repetition and aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let sc = &spec.scenario;
    let n = sc.n_sbs;
    for algo in &spec.algos {
        // surface guard violations before spending time on runs
        algo.build(sc, spec.horizon)?;
    }
    let matrix = sc.realize(spec.horizon, spec.seed)?;
    let fixed_trace = !sc.is_adaptive();
    let jobs: Vec<(usize, usize)> = (0..spec.algos.len()).flat_map(|a| (0..spec.reps).map(move |r| (a, r))).collect();
    let outputs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(a, rep)| {
            let algo = &spec.algos[a];
            let rec = run_policy(algo, sc, matrix.clone(), spec.horizon, spec.seed, rep)?;
            let regret = RegretKind::for_algo(algo, sc).measure(&rec, &matrix, n)?;
            Ok(RunOutput {
                rep,
                seed: repetition_seed(spec.seed, rep),
                total_cost: rec.total_cost(),
                handovers: rec.handovers(),
                regret,
                trace: trace_rows(&rec, &matrix, n, spec.stride, fixed_trace),
            })
        })
        .collect::<Result<_>>()?;
    let mut outputs = outputs.into_iter();
    let algos = spec
        .algos
        .iter()
        .map(|algo| {
            let runs: Vec<RunOutput> = outputs.by_ref().take(spec.reps).collect();
            let regrets: Vec<f64> = runs.iter().map(|r| r.regret).collect();
            let (mean_regret, se) = mean_se(&regrets);
            let bound = applicable_bound(algo, sc, spec.horizon).map(|th| check_bound(th, mean_regret));
            AlgoResult {
                label: algo.to_string(),
                regret_kind: RegretKind::for_algo(algo, sc),
                curve: mean_curve(&runs),
                runs,
                mean_regret,
                se,
                bound,
            }
        })
        .collect();
    Ok(ExperimentResult { id: spec.id.clone(), horizon: spec.horizon, reps: spec.reps, algos })
}

fn mean_curve(runs: &[RunOutput]) -> Vec<CurvePoint> {
    let Some(first) = runs.first() else { return vec![] };
    (0..first.trace.len())
        .map(|i| {
            let cum: Vec<f64> = runs.iter().map(|r| r.trace[i].cum_cost).collect();
            let reg: Option<Vec<f64>> = runs.iter().map(|r| r.trace[i].per_slot_regret).collect();
            let (m, se) = match reg {
                Some(v) => {
                    let (m, se) = mean_se(&v);
                    (Some(m), Some(se))
                }
                None => (None, None),
            };
            CurvePoint { t: first.trace[i].t, mean_cum_cost: mean_se(&cum).0, mean_per_slot_regret: m, se_per_slot_regret: se }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const TRACE_HEADER: [&str; 10] =
    ["experiment_id", "algo", "seed", "t", "action", "service_energy", "switched", "cum_cost", "e_best_prefix", "per_slot_regret"];
pub const SUMMARY_HEADER: [&str; 7] = ["experiment_id", "algo", "T", "mean_regret", "se", "bound", "pass"];

pub fn write_trace_csv<W: Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for res in results {
        for algo in &res.algos {
            for run in &algo.runs {
                for row in &run.trace {
                    w.write_record([
                        res.id.clone(),
                        algo.label.clone(),
                        run.seed.to_string(),
                        row.t.to_string(),
                        row.action.index().to_string(),
                        row.service_energy.to_string(),
                        u8::from(row.switched).to_string(),
                        row.cum_cost.to_string(),
                        opt(row.e_best_prefix),
                        opt(row.per_slot_regret),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for res in results {
        for algo in &res.algos {
            w.write_record([
                res.id.clone(),
                algo.label.clone(),
                res.horizon.to_string(),
                algo.mean_regret.to_string(),
                algo.se.to_string(),
                opt(algo.bound.as_ref().map(|b| b.bound)),
                algo.bound.as_ref().map(|b| b.pass.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean curves for plotting: one row per algorithm and recorded slot.
pub fn write_curve_csv<W: Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["experiment_id", "algo", "t", "mean_cum_cost", "mean_per_slot_regret", "se_per_slot_regret"])?;
    for res in results {
        for algo in &res.algos {
            for p in &algo.curve {
                w.write_record([
                    res.id.clone(),
                    algo.label.clone(),
                    p.t.to_string(),
                    p.mean_cum_cost.to_string(),
                    opt(p.mean_per_slot_regret),
                    opt(p.se_per_slot_regret),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `trace.csv`, `summary.csv` and `curves.csv` into `dir`.
pub fn write_outputs(dir: &Path, results: &[ExperimentResult]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trace_csv(std::fs::File::create(dir.join("trace.csv"))?, results)?;
    write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?, results)?;
    write_curve_csv(std::fs::File::create(dir.join("curves.csv"))?, results)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{AvailabilitySpec, GeneratorSpec};
    use crate::experts::all_rankings;

    fn record(actions: &[usize], service: &[f64], e_s: f64, n: usize) -> RunRecord {
        let switched = (0..actions.len()).map(|i| i > 0 && actions[i] != actions[i - 1]).collect();
        RunRecord {
            initial: SbsId(actions[0]),
            actions: actions.iter().map(|&a| SbsId(a)).collect(),
            service: service.to_vec(),
            switched,
            availability: vec![AvailableSet::all(n); actions.len()],
            handover_cost: e_s,
        }
    }

    #[test]
    fn bound_oracles() {
        assert!((brew_regret_bound(6, 100_000) - 16330.41191863287).abs() < 1e-6);
        assert!((delayed_brew_regret_bound(6, 100_000, 2) - 24180.62).abs() < 0.01);
        assert!((delayed_brew_regret_bound(6, 100_000, 3) - 32030.83).abs() < 0.01);
        assert!((ranking_expert_regret_bound(3, 10_000) - 1089.266391550551).abs() < 1e-9);
        assert!((contextual_regret_bound(3, 10_000) - 1886.664733142769).abs() < 1e-9);
        assert!((contextual_regret_bound(4, 10_000) - 3767.712072049519).abs() < 1e-9);
        for th in [RegretBound::Brew { n: 3, horizon: 10 }, RegretBound::Contextual { n: 4, horizon: 10 }] {
            assert!(check_bound(th, 0.0).pass);
        }
        assert!(!check_bound(RegretBound::RankingExpert { n: 3, horizon: 10_000 }, 2000.0).pass);
    }

    #[test]
    fn fixed_regret_examples() {
        let m: Vec<f64> = (0..11).flat_map(|_| [0.3, 0.3]).collect();
        let alt: Vec<usize> = (0..11).map(|t| t % 2).collect();
        let rec = record(&alt, &[0.3; 11], 0.2, 2);
        assert!((fixed_action_regret(&rec, &m, 2).unwrap() - 2.0).abs() < 1e-12);
        let m: Vec<f64> = (0..5).flat_map(|_| [0.1, 0.6]).collect();
        let rec = record(&[0; 5], &[0.1; 5], 0.2, 2);
        assert_eq!(fixed_action_regret(&rec, &m, 2).unwrap(), 0.0);
    }

    #[test]
    fn basic_pool_reduces_to_fixed_regret_when_always_on() {
        let mut rng = RngStream::new(1, 1);
        let n = 3;
        let m: Vec<f64> = (0..60).map(|_| rng.uniform() * 0.8).collect();
        let actions: Vec<usize> = (0..20).map(|_| rng.index(n)).collect();
        let service: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| m[i * n + a]).collect();
        let rec = record(&actions, &service, 0.2, n);
        let fixed = fixed_action_regret(&rec, &m, n).unwrap();
        let expert = expert_regret(&rec, &m, n, ExpertPool::BasicRankings).unwrap();
        assert!((fixed - expert).abs() < 1e-12);
    }

    #[test]
    fn single_expert_pool_regret() {
        let m = vec![0.2, 0.5, 0.3, 0.1];
        let rec = record(&[1, 0], &[0.5, 0.3], 0.2, 2);
        // N = 1 is degenerate; use the N = 2 basic pool and pick the expert directly
        let costs = replay_expert_costs(&rec, &m, 2, ExpertPool::BasicRankings).unwrap();
        assert!((costs[0] - 0.5).abs() < 1e-12); // ranking (0,1): 0.2 + 0.3
        assert!((costs[1] - 0.6).abs() < 1e-12); // ranking (1,0): 0.5 + 0.1
        assert!((rec.total_cost() - costs[0] - (1.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn replay_matches_brute_force_enumeration() {
        let n = 3;
        let t = 40;
        let mut rng = RngStream::new(5, 6);
        let m: Vec<f64> = (0..t * n).map(|_| rng.uniform() * 0.8).collect();
        let avail: Vec<AvailableSet> = (0..t)
            .map(|_| loop {
                let s = AvailableSet::from_mask(rng.index(8) as u64);
                if !s.is_empty() {
                    break s;
                }
            })
            .collect();
        let actions: Vec<SbsId> = avail.iter().map(|s| s.nth(0).unwrap()).collect();
        let rec = RunRecord {
            initial: SbsId(2),
            service: actions.iter().enumerate().map(|(i, a)| m[i * n + a.index()]).collect(),
            switched: (0..t).map(|i| i > 0 && actions[i] != actions[i - 1]).collect(),
            actions,
            availability: avail.clone(),
            handover_cost: 0.2,
        };
        let replay = replay_expert_costs(&rec, &m, n, ExpertPool::BasicRankings).unwrap();
        for (k, ranking) in all_rankings(n).iter().enumerate() {
            let picks: Vec<usize> = avail.iter().map(|&s| ranking.recommend(s).unwrap().index()).collect();
            let mut cost: f64 = picks.iter().enumerate().map(|(i, &a)| m[i * n + a]).sum();
            cost += 0.2 * (1..t).filter(|&i| picks[i] != picks[i - 1]).count() as f64;
            assert!((replay[k] - cost).abs() < 1e-12);
        }
        assert!(replay_expert_costs(&rec, &m, 4, ExpertPool::RankingExperts).is_err());
    }

    #[test]
    fn contextual_regret_by_hand() {
        // N = 2, actions 0,1,1 from initial 0; E_s = 0.5
        let m = vec![0.1, 0.2, 0.3, 0.0, 0.2, 0.4];
        let rec = record(&[0, 1, 1], &[0.1, 0.0, 0.4], 0.5, 2);
        // context 0 covers slots 1,2: learner 0.1 + (0.0 + 0.5) = 0.6;
        // rankings: always 0 -> 0.1 + 0.3 = 0.4, always 1 -> 0.2 + (0.0 + 0.5) = 0.7
        // context 1 covers slot 3: learner 0.4; best ranking: 0.2 + 0.5 = 0.7 vs 0.4 -> 0.4
        let r = contextual_regret(&rec, &m, 2).unwrap();
        assert!((r - 0.2).abs() < 1e-12, "{r}");
    }

    #[test]
    fn deterministic_policy_repetitions_are_identical() {
        let sc = Scenario::new("c", 3, 0.2, GeneratorSpec::Adversarial { variant: 3 }).with_measurement_lag(0);
        let spec = ExperimentSpec::new("det", sc, vec!["macro".parse().unwrap()], 500).reps(5).stride(50);
        let res = run_experiment(&spec).unwrap();
        let runs = &res.algos[0].runs;
        for r in runs {
            assert_eq!(r.trace, runs[0].trace);
        }
        assert_eq!(res.algos[0].se, 0.0);
    }

    #[test]
    fn decomposition_and_prefix_rows() {
        let sc = Scenario::new("u", 3, 0.2, GeneratorSpec::Uniform { low: 0.0, high: 0.8 })
            .with_availability(AvailabilitySpec::Iid { p_on: vec![0.8; 3] });
        let m = sc.realize(300, 3).unwrap();
        let rec = run_policy(&AlgoSpec::Cre, &sc, m.clone(), 300, 3, 0).unwrap();
        let direct = crate::model::total_cost(&rec.actions, &rec.service, 0.2).unwrap();
        assert!((direct - rec.total_cost()).abs() < 1e-9);
        let rows = trace_rows(&rec, &m, 3, 7, true);
        assert_eq!(rows.last().unwrap().t, 300);
        assert!((rows.last().unwrap().cum_cost - rec.total_cost()).abs() < 1e-9);
        for (i, (&a, s)) in rec.actions.iter().zip(&rec.availability).enumerate() {
            assert!(s.contains(a), "slot {}", i + 1);
            assert_eq!(rec.service[i], m[i * 3 + a.index()]);
        }
    }

    #[test]
    fn empty_algorithm_list_is_a_config_error() {
        let sc = Scenario::new("c", 2, 0.1, GeneratorSpec::Constant { means: vec![0.1, 0.9] });
        let spec = ExperimentSpec::new("e", sc, vec![], 10);
        assert!(matches!(run_experiment(&spec), Err(Error::Config(_))));
    }
}
