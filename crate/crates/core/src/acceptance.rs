//! The acceptance suite: one check per published property, each returning a
//! pass/fail report with the measured numbers.

use std::time::Instant;

use crate::brew::{brew_missing_estimate, BatchAccumulator, MissingFeedbackConfig};
use crate::env::{AvailabilitySpec, ChannelSpec, GeneratorSpec, Scenario, ADVERSARIAL_VARIANTS};
use crate::error::Result;
use crate::experts::{ContextualRankingExpert, ExpertMode, RankingExpertLearner};
use crate::harness::{
    brew_regret_bound, check_bound, delayed_brew_regret_bound, forced_handover_check, run_experiment, run_policy, ExperimentResult,
    ExperimentSpec, RegretBound,
};
use crate::model::{AvailableSet, SbsId};
use crate::policy::AlgoSpec;
use crate::rng::{label, stream_id, RngStream};
use crate::udn::{noise_power_dbm, pathloss_db, raw_slot_energy, simulate, Layout, LoadState, Point, RadioParams, UdnConfig};

const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

pub struct Criterion {
    pub id: &'static str,
    pub name: &'static str,
    pub run: fn() -> Result<(bool, String)>,
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: "c1", name: "brew-bound", run: c1_brew_bound },
        Criterion { id: "c2", name: "sublinear", run: c2_sublinear },
        Criterion { id: "c3", name: "stuck-threshold", run: c3_stuck_threshold },
        Criterion { id: "c4", name: "delay-bound", run: c4_delay_bound },
        Criterion { id: "c5", name: "unbiased-missing", run: c5_unbiased },
        Criterion { id: "c6", name: "forced-handover", run: c6_forced_handover },
        Criterion { id: "c7", name: "ranking-expert", run: c7_ranking_expert },
        Criterion { id: "c8", name: "contextual-expert", run: c8_contextual_expert },
        Criterion { id: "c9", name: "simulator", run: c9_simulator },
        Criterion { id: "c10", name: "determinism", run: c10_determinism },
    ]
}

/// Runs every criterion whose id or name contains `filter`.
pub fn run_criteria(filter: Option<&str>, mut on_report: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    criteria()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.id == f || c.name.contains(f)))
        .map(|c| {
            let start = Instant::now();
            let (pass, detail) = match (c.run)() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            let report = CriterionReport { id: c.id, name: c.name, pass, detail, seconds: start.elapsed().as_secs_f64() };
            on_report(&report);
            report
        })
        .collect()
}

pub fn format_report(r: &CriterionReport) -> String {
    format!("[{}] {:<4} {:<17} {:>7.1}s  {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name, r.seconds, r.detail)
}

fn adversarial(variant: usize, n: usize, channel: ChannelSpec) -> Scenario {
    Scenario::new(format!("adversarial-{variant}"), n, 0.2, GeneratorSpec::Adversarial { variant }).with_channel(channel)
}

fn brew() -> AlgoSpec {
    AlgoSpec::Brew { tau: None, gamma: None }
}

fn run(id: &str, scenario: Scenario, algos: Vec<AlgoSpec>, horizon: usize, reps: usize, seed: u64) -> Result<ExperimentResult> {
    let stride = (horizon / 100).max(1);
    run_experiment(&ExperimentSpec::new(id, scenario, algos, horizon).reps(reps).seed(seed).stride(stride))
}

fn adversarial_brew_regrets(delay: usize) -> Result<Vec<f64>> {
    (0..ADVERSARIAL_VARIANTS)
        .map(|v| {
            let sc = adversarial(v, 6, ChannelSpec { delay, p_miss: 0.0 });
            let res = run("adv", sc, vec![brew()], 100_000, 20, SEED + v as u64)?;
            Ok(res.algos[0].mean_regret)
        })
        .collect()
}

fn c1_brew_bound() -> Result<(bool, String)> {
    let start = Instant::now();
    let regrets = adversarial_brew_regrets(0)?;
    let bound = brew_regret_bound(6, 100_000);
    let worst = regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= bound && secs < 120.0;
    Ok((pass, format!("N=6 T=1e5, 10 matrices x 20 seeds: worst mean regret {worst:.1} <= bound {bound:.1}; {secs:.1}s (< 120s)")))
}

/// `R(T)/T` of BREW at three decades.
fn per_slot_regret_decades(scenario: &Scenario, seed: u64) -> Result<Vec<f64>> {
    [1_000usize, 10_000, 100_000]
        .iter()
        .map(|&t| Ok(run("decade", scenario.clone(), vec![brew()], t, 20, seed)?.algos[0].mean_regret / t as f64))
        .collect()
}

fn decreasing_by(xs: &[f64], factor: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= factor * w[0])
}

fn c2_sublinear() -> Result<(bool, String)> {
    let sc = Scenario::new("constant-gap", 2, 0.1, GeneratorSpec::Constant { means: vec![0.1, 0.9] });
    let r = per_slot_regret_decades(&sc, SEED)?;
    Ok((decreasing_by(&r, 0.8), format!("R(T)/T at 1e3,1e4,1e5 = {:.4}, {:.4}, {:.4} (each <= 0.8x previous)", r[0], r[1], r[2])))
}

/// Least-squares slope and R^2 of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

fn c3_stuck_threshold() -> Result<(bool, String)> {
    let theta = 0.5;
    let sc = Scenario::new("stuck-threshold", 2, 0.1, GeneratorSpec::StuckThreshold { theta }).with_measurement_lag(0);
    let res = run("stuck", sc.clone(), vec![AlgoSpec::Macro { threshold: theta }], 10_000, 20, SEED)?;
    let curve = &res.algos[0].curve;
    let half: Vec<_> = curve.iter().filter(|p| p.t >= 5_000).collect();
    let x: Vec<f64> = half.iter().map(|p| p.t as f64).collect();
    let y: Vec<f64> = half.iter().map(|p| p.mean_per_slot_regret.unwrap_or(f64::NAN) * p.t as f64).collect();
    let (slope, r2) = linear_fit(&x, &y);
    let brew_r = per_slot_regret_decades(&sc, SEED)?;
    let pass = slope > 0.0 && r2 > 0.99 && decreasing_by(&brew_r, 0.8);
    Ok((
        pass,
        format!("threshold rule: slope {slope:.4} R^2 {r2:.5}; learner R(T)/T = {:.4}, {:.4}, {:.4}", brew_r[0], brew_r[1], brew_r[2]),
    ))
}

fn c4_delay_bound() -> Result<(bool, String)> {
    let base = adversarial_brew_regrets(0)?;
    let mut detail = Vec::new();
    let mut pass = true;
    let mut prev_total: f64 = base.iter().sum();
    for d in [1usize, 3] {
        let r = adversarial_brew_regrets(d)?;
        let bound = delayed_brew_regret_bound(6, 100_000, d);
        let worst = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = r.iter().sum();
        pass &= worst <= bound && total >= prev_total;
        detail.push(format!("d={d}: worst {worst:.1} <= {bound:.1}, mean over matrices {:.1}", total / r.len() as f64));
        prev_total = total;
    }
    Ok((pass, format!("d=0 mean {:.1}; {}", base.iter().sum::<f64>() / base.len() as f64, detail.join("; "))))
}

fn c5_unbiased() -> Result<(bool, String)> {
    let tau = 3;
    let p = 0.3;
    let cfg = MissingFeedbackConfig::new(p)?;
    let loss = [0.5, 0.2];
    let probs = [0.4, 0.6];
    // exact expectation over the arm choice and the 2^tau observation patterns
    let mut exact = [0.0; 2];
    for (arm, &pa) in probs.iter().enumerate() {
        for pattern in 0u32..(1 << tau) {
            let mut acc = BatchAccumulator::new(1, SbsId(arm));
            let mut weight = pa;
            for s in 0..tau {
                let seen = pattern >> s & 1 == 1;
                weight *= if seen { 1.0 - p } else { p };
                acc.record_slot(seen.then_some(loss[arm]));
            }
            let est = brew_missing_estimate(&acc, &cfg, &probs)?;
            for k in 0..2 {
                exact[k] += weight * est[k];
            }
        }
    }
    let batches = 1_000_000usize;
    let mut rng = RngStream::new(SEED, stream_id(&[label("unbiased")]));
    let mut sum = [0.0; 2];
    let mut sq = [0.0; 2];
    for _ in 0..batches {
        let arm = rng.categorical(&probs);
        let mut acc = BatchAccumulator::new(1, SbsId(arm));
        for _ in 0..tau {
            let seen = !rng.bernoulli(p);
            acc.record_slot(seen.then_some(loss[arm]));
        }
        let est = brew_missing_estimate(&acc, &cfg, &probs)?;
        for k in 0..2 {
            sum[k] += est[k];
            sq[k] += est[k] * est[k];
        }
    }
    let mut pass = true;
    let mut detail = Vec::new();
    for k in 0..2 {
        let m = sum[k] / batches as f64;
        let se = ((sq[k] / batches as f64 - m * m) / batches as f64).sqrt();
        pass &= (m - exact[k]).abs() <= 3.0 * se;
        detail.push(format!("arm {k}: MC {m:.5} vs exact {:.5} (3 SE = {:.5})", exact[k], 3.0 * se));
    }
    Ok((pass, detail.join("; ")))
}

fn c6_forced_handover() -> Result<(bool, String)> {
    let (n, horizon, e_max) = (4, 10_000, 0.2);
    let sc = crate::env::forced_handover_scenario(n, horizon, e_max + 1.0 / 3.0, e_max)?;
    let matrix = sc.realize(horizon, SEED)?;
    let learners = [brew(), AlgoSpec::BrewMissing { p: Some(0.3), tau: None }, AlgoSpec::Re { mode: ExpertMode::Factored }, AlgoSpec::Cre];
    let mut pass = true;
    let mut detail = Vec::new();
    for algo in &learners {
        let mut min_regret = f64::INFINITY;
        let mut handovers_ok = true;
        for rep in 0..5 {
            let rec = run_policy(algo, &sc, matrix.clone(), horizon, SEED, rep)?;
            let chk = forced_handover_check(&rec, &matrix, n, e_max)?;
            handovers_ok &= chk.handovers == horizon - 1;
            pass &= chk.pass(horizon);
            min_regret = min_regret.min(chk.regret);
        }
        detail.push(format!("{algo}: min regret {min_regret:.0}{}", if handovers_ok { "" } else { " (handover count wrong)" }));
    }
    Ok((pass, format!("bound T*E_max/N = {:.0}, handovers = T-1; {}", horizon as f64 * e_max / n as f64, detail.join(", "))))
}

/// Scripted on/off and losses for the naive/factored comparison.
fn scripted_step(script: u64, t: usize, n: usize) -> (AvailableSet, f64) {
    let mut rng = RngStream::new(script, t as u64);
    let avail = loop {
        let s = AvailableSet::from_mask(rng.index(1 << n) as u64);
        if !s.is_empty() {
            break s;
        }
    };
    (avail, rng.uniform() * 0.8)
}

fn c7_ranking_expert() -> Result<(bool, String)> {
    let n = 3;
    let mut max_dev: f64 = 0.0;
    for script in 0..10u64 {
        let mut naive = RankingExpertLearner::new(n, ExpertMode::Naive)?;
        let mut fact = RankingExpertLearner::new(n, ExpertMode::Factored)?;
        let mut rng_a = RngStream::new(script, 1);
        let mut rng_b = RngStream::new(script, 1);
        let mut prev = SbsId(0);
        for t in 1..=50 {
            let (avail, base) = scripted_step(script, t, n);
            let a = naive.step(prev, avail, &mut rng_a)?;
            let b = fact.step(prev, avail, &mut rng_b)?;
            for (x, y) in a.probs.iter().zip(&b.probs) {
                max_dev = max_dev.max((x - y).abs());
            }
            let loss = base + if a.executed != prev { 0.2 } else { 0.0 };
            naive.update(prev, avail, a.executed, a.p_executed(), loss)?;
            fact.update(prev, avail, b.executed, b.p_executed(), loss)?;
            prev = a.executed;
        }
    }
    let sc = onoff_scenario(n, 0.3);
    let res = run("re", sc, vec![AlgoSpec::Re { mode: ExpertMode::Factored }], 10_000, 20, SEED)?;
    let algo = &res.algos[0];
    let bound = RegretBound::RankingExpert { n, horizon: 10_000 }.bound();
    let worst = algo.runs.iter().map(|r| r.regret).fold(f64::NEG_INFINITY, f64::max);
    let chk = check_bound(RegretBound::RankingExpert { n, horizon: 10_000 }, worst);
    let pass = max_dev < 1e-10 && chk.pass;
    Ok((
        pass,
        format!(
            "naive vs factored max deviation {max_dev:.2e} (< 1e-10); worst expert regret {worst:.1}, mean {:.1} <= bound {bound:.1}",
            algo.mean_regret
        ),
    ))
}

/// i.i.d. on/off with well-separated SBS means and heavy per-slot noise.
pub fn onoff_scenario(n: usize, p_off: f64) -> Scenario {
    let means: Vec<f64> = (0..n).map(|a| 0.15 + 0.5 * a as f64 / (n - 1) as f64).collect();
    Scenario::new(format!("onoff-{p_off}"), n, 0.1, GeneratorSpec::UniformNoise { means, half_width: 0.4 })
        .with_availability(AvailabilitySpec::Iid { p_on: vec![1.0 - p_off; n] })
}

fn c8_contextual_expert() -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [3usize, 4] {
        let res = run("cre", onoff_scenario(n, 0.3), vec![AlgoSpec::Cre], 10_000, 20, SEED + n as u64)?;
        let worst = res.algos[0].runs.iter().map(|r| r.regret).fold(f64::NEG_INFINITY, f64::max);
        let chk = check_bound(RegretBound::Contextual { n, horizon: 10_000 }, worst);
        pass &= chk.pass;
        detail.push(format!("N={n}: worst contextual regret {worst:.1} <= {:.1}", chk.bound));
    }
    // isolation: feeding one context leaves the others untouched
    let mut cre = ContextualRankingExpert::new(4)?;
    let mut rng = RngStream::new(SEED, 0);
    for t in 1..=200 {
        let (avail, loss) = scripted_step(7, t, 4);
        let d = cre.step(SbsId(1), avail, &mut rng)?;
        cre.update(SbsId(1), avail, d.executed, d.p_executed(), loss)?;
    }
    let isolated = [0, 2, 3]
        .iter()
        .all(|&x| cre.kappa(SbsId(x)) == 1 && cre.uniform_loss(SbsId(x)) == 0.0 && cre.context_losses(SbsId(x)).iter().all(|&l| l == 0.0));
    pass &= isolated;
    detail.push(format!("isolation {}", if isolated { "exact" } else { "broken" }));
    for p_off in [0.1, 0.3] {
        let res = run("fig7", onoff_scenario(4, p_off), vec![AlgoSpec::Cre, AlgoSpec::ExtendedMacro], 10_000, 20, SEED)?;
        let per_slot = |i: usize| res.algos[i].curve.last().map(|p| p.mean_cum_cost / p.t as f64).unwrap_or(f64::NAN);
        let (cre_cost, ext_cost) = (per_slot(0), per_slot(1));
        pass &= cre_cost < ext_cost;
        detail.push(format!("P_off={p_off}: per-slot cost {cre_cost:.4} vs {ext_cost:.4}"));
    }
    Ok((pass, detail.join("; ")))
}

fn c9_simulator() -> Result<(bool, String)> {
    let pl = pathloss_db(80.0)?;
    let noise = noise_power_dbm(20e6, 5.5)?;
    let layout = Layout::new(6, 80.0, 14.0)?;
    let load = LoadState::new(6, 3);
    let e: Vec<f64> = (0..6)
        .map(|k| raw_slot_energy(&layout, &RadioParams::default(), &load, &[0.0; 6], Point::default(), SbsId(k), 1e6, false))
        .collect::<Result<_>>()?;
    let symmetric = e.iter().all(|&v| v == e[0]);
    let run = simulate(&UdnConfig::default(), 20_000, SEED)?;
    let in_range = run.matrix.iter().all(|&v| (0.0..=1.0).contains(&v));
    let pass = (pl - 96.856).abs() <= 0.001 && (noise + 95.49).abs() <= 0.01 && symmetric && in_range;
    Ok((pass, format!("PL(80 m) = {pl:.4} dB, noise = {noise:.3} dBm, center symmetry {symmetric}, energies in [0,1] {in_range}")))
}

fn c10_determinism() -> Result<(bool, String)> {
    let dir = tempfile_dir()?;
    let mut cfg = crate::cli::ExperimentConfig::preset("fig7")?;
    cfg.horizon = Some(2_000);
    cfg.reps = 3;
    let read = |sub: &str| -> Result<Vec<Vec<u8>>> {
        let mut c = cfg.clone();
        c.out = dir.join(sub);
        crate::cli::cmd_run(&c)?;
        ["trace.csv", "summary.csv", "curves.csv"].iter().map(|f| Ok(std::fs::read(c.out.join(f))?)).collect()
    };
    let a = read("a")?;
    let b = read("b")?;
    let _ = std::fs::remove_dir_all(&dir);
    let bytes: usize = a.iter().map(Vec::len).sum();
    Ok((a == b, format!("two runs of the fig7 preset (T=2000, 3 reps) wrote byte-identical CSVs ({bytes} bytes)")))
}

fn tempfile_dir() -> Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("udn-mobility-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
