//! Loss generators, feedback channels and SBS availability.
//!
//! A [`Scenario`] is the serializable description (TOML on disk); an
//! [`Environment`] is one running instance of it for a single repetition.
//! Loss matrices are oblivious: they are realized once from the experiment
//! seed before any policy plays, as a row-major `T x N` array.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AvailableSet, SbsId, SlotCost, MAX_SBS};
use crate::rng::{label, stream_id, RngStream};
use crate::udn::UdnConfig;

/// How per-slot energies are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Explicit rows, one per slot.
    Matrix { rows: Vec<Vec<f64>> },
    /// Rows read from a CSV file with a header line; relative paths resolve
    /// against the scenario file's directory.
    Csv { path: PathBuf },
    /// The same energy vector every slot.
    Constant { means: Vec<f64> },
    /// `mean + U(-half_width, half_width)`, clipped to the allowed range,
    /// independently per slot and SBS.
    UniformNoise { means: Vec<f64>, half_width: f64 },
    /// Independent `U(low, high)` draws per slot and SBS.
    Uniform { low: f64, high: f64 },
    /// One of the built-in adversarial families, `variant` in `0..10`.
    Adversarial { variant: usize },
    /// The two-SBS sequence that traps the threshold rule, with threshold `theta`.
    StuckThreshold { theta: f64 },
    /// The system-level simulator; its SBS count and handover cost are taken
    /// from the scenario.
    Udn {
        #[serde(default)]
        udn: UdnConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    /// Extra slots between playing a slot and receiving its feedback.
    pub delay: usize,
    /// Per-slot probability that feedback is lost.
    pub p_miss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AvailabilitySpec {
    #[default]
    AlwaysOn,
    /// SBS `a` is on with probability `p_on[a]`, independently per slot.
    Iid { p_on: Vec<f64> },
    /// Every SBS except the one just played is on.
    Adaptive,
    /// Explicit on-sets, repeated cyclically.
    Scripted { sets: Vec<Vec<usize>> },
}

fn default_lag() -> usize {
    1
}

fn default_handover_cost() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub n_sbs: usize,
    /// Default horizon when the experiment does not set one.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_handover_cost")]
    pub handover_cost: f64,
    /// Age in slots of the measurement vector the threshold rules see.
    #[serde(default = "default_lag")]
    pub measurement_lag: usize,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub availability: AvailabilitySpec,
}

impl Scenario {
    pub fn new(name: impl Into<String>, n_sbs: usize, handover_cost: f64, generator: GeneratorSpec) -> Self {
        Scenario {
            name: name.into(),
            n_sbs,
            horizon: None,
            handover_cost,
            measurement_lag: default_lag(),
            generator,
            channel: ChannelSpec::default(),
            availability: AvailabilitySpec::AlwaysOn,
        }
    }

    pub fn with_channel(mut self, channel: ChannelSpec) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_availability(mut self, availability: AvailabilitySpec) -> Self {
        self.availability = availability;
        self
    }

    pub fn with_measurement_lag(mut self, lag: usize) -> Self {
        self.measurement_lag = lag;
        self
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    /// Loads a scenario file; a CSV generator path is made absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut sc: Scenario = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let GeneratorSpec::Csv { path: csv } = &mut sc.generator {
            if csv.is_relative() {
                *csv = path.parent().unwrap_or(Path::new(".")).join(&*csv);
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Largest service energy allowed so that energy plus handover cost stays within one.
    pub fn e_max(&self) -> f64 {
        1.0 - self.handover_cost
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self.availability, AvailabilitySpec::Adaptive)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sbs;
        if n == 0 || n > MAX_SBS {
            return Err(Error::config(format!("n_sbs must lie in 1..={MAX_SBS}, got {n}")));
        }
        if !(0.0..1.0).contains(&self.handover_cost) {
            return Err(Error::config(format!("handover_cost must lie in [0,1), got {}", self.handover_cost)));
        }
        if !(0.0..1.0).contains(&self.channel.p_miss) {
            return Err(Error::config(format!("p_miss must lie in [0,1), got {}", self.channel.p_miss)));
        }
        let in_range = |v: f64| (0.0..=self.e_max() + 1e-12).contains(&v);
        let check_vec = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != n {
                return Err(Error::config(format!("{what} has {} entries for {n} SBSs", v.len())));
            }
            if let Some(bad) = v.iter().find(|&&x| !in_range(x)) {
                return Err(Error::config(format!("{what} entry {bad} outside [0, 1 - handover_cost]")));
            }
            Ok(())
        };
        match &self.generator {
            GeneratorSpec::Matrix { rows } => {
                if rows.is_empty() {
                    return Err(Error::config("matrix generator has no rows"));
                }
                for r in rows {
                    check_vec(r, "matrix row")?;
                }
            }
            GeneratorSpec::Csv { .. } => {}
            GeneratorSpec::Constant { means } => check_vec(means, "means")?,
            GeneratorSpec::UniformNoise { means, half_width } => {
                check_vec(means, "means")?;
                if !(*half_width >= 0.0) {
                    return Err(Error::config("half_width must be non-negative"));
                }
            }
            GeneratorSpec::Uniform { low, high } => {
                if !(in_range(*low) && in_range(*high) && low <= high) {
                    return Err(Error::config("uniform generator needs 0 <= low <= high <= 1 - handover_cost"));
                }
            }
            GeneratorSpec::Adversarial { variant } => {
                if *variant >= ADVERSARIAL_VARIANTS {
                    return Err(Error::config(format!("adversarial variant must be below {ADVERSARIAL_VARIANTS}")));
                }
            }
            GeneratorSpec::StuckThreshold { theta } => {
                if n != 2 {
                    return Err(Error::config("the stuck-threshold sequence is defined for two SBSs"));
                }
                if !(*theta > 0.0 && (1.0 + theta) / 2.0 <= self.e_max() + 1e-12) {
                    return Err(Error::config("stuck-threshold needs theta > 0 and (1 + theta)/2 <= 1 - handover_cost"));
                }
            }
            GeneratorSpec::Udn { udn } => {
                UdnConfig { n_sbs: n, handover_cost: self.handover_cost, ..udn.clone() }.validate()?;
            }
        }
        match &self.availability {
            AvailabilitySpec::AlwaysOn => {}
            AvailabilitySpec::Iid { p_on } => {
                if p_on.len() != n || p_on.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config("iid availability needs one probability in [0,1] per SBS"));
                }
                if p_on.iter().all(|&p| p == 0.0) {
                    return Err(Error::config("iid availability with every SBS always off"));
                }
            }
            AvailabilitySpec::Adaptive => {
                if n < 2 {
                    return Err(Error::config("adaptive availability needs at least two SBSs"));
                }
            }
            AvailabilitySpec::Scripted { sets } => {
                if sets.is_empty() {
                    return Err(Error::config("scripted availability has no sets"));
                }
                for (i, s) in sets.iter().enumerate() {
                    if s.is_empty() {
                        return Err(Error::config(format!("scripted availability set {i} is empty")));
                    }
                    if s.iter().any(|&a| a >= n) {
                        return Err(Error::config(format!("scripted availability set {i} names an SBS outside 0..{n}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Realizes the oblivious loss matrix for a horizon; depends only on the
    /// scenario and the seed.
    pub fn realize(&self, horizon: usize, seed: u64) -> Result<Arc<Vec<f64>>> {
        self.validate()?;
        if horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        let n = self.n_sbs;
        let e_max = self.e_max();
        let mut rng = RngStream::new(seed, stream_id(&[label("matrix")]));
        let m = match &self.generator {
            GeneratorSpec::Matrix { rows } => take_rows(rows.iter().flatten().copied().collect(), n, horizon)?,
            GeneratorSpec::Csv { path } => {
                let m = read_matrix_csv(path, n)?;
                self.check_entries(&m)?;
                take_rows(m, n, horizon)?
            }
            GeneratorSpec::Constant { means } => means.iter().copied().cycle().take(n * horizon).collect(),
            GeneratorSpec::UniformNoise { means, half_width } => (0..horizon)
                .flat_map(|_| means.to_vec())
                .map(|m| (m + half_width * (2.0 * rng.uniform() - 1.0)).clamp(0.0, e_max))
                .collect(),
            GeneratorSpec::Uniform { low, high } => (0..n * horizon).map(|_| low + (high - low) * rng.uniform()).collect(),
            GeneratorSpec::Adversarial { variant } => adversarial_matrix(*variant, n, horizon, e_max, &mut rng)?,
            GeneratorSpec::StuckThreshold { theta } => {
                crate::baselines::stuck_threshold_sequence(horizon.max(3), *theta)?.into_iter().take(2 * horizon).collect()
            }
            GeneratorSpec::Udn { udn } => {
                let cfg = UdnConfig { n_sbs: n, handover_cost: self.handover_cost, ..udn.clone() };
                crate::udn::simulate(&cfg, horizon, seed)?.matrix
            }
        };
        Ok(Arc::new(m))
    }

    fn check_entries(&self, m: &[f64]) -> Result<()> {
        match m.iter().find(|&&x| !(0.0..=self.e_max() + 1e-12).contains(&x)) {
            Some(bad) => Err(Error::config(format!("energy {bad} outside [0, 1 - handover_cost]"))),
            None => Ok(()),
        }
    }
}

fn take_rows(mut m: Vec<f64>, n: usize, horizon: usize) -> Result<Vec<f64>> {
    if m.len() < n * horizon {
        return Err(Error::config(format!("matrix has {} slots, horizon is {horizon}", m.len() / n)));
    }
    m.truncate(n * horizon);
    Ok(m)
}

/// Reads a `T x N` matrix from a CSV file with one header line.
pub fn read_matrix_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut m = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != n {
            return Err(Error::config(format!("{} row {}: {} columns, expected {n}", path.display(), i + 1, rec.len())));
        }
        for field in rec.iter() {
            let v: f64 =
                field.trim().parse().map_err(|_| Error::config(format!("{} row {}: bad number {field:?}", path.display(), i + 1)))?;
            m.push(v);
        }
    }
    if m.is_empty() {
        return Err(Error::config(format!("{} has no rows", path.display())));
    }
    Ok(m)
}

/// Writes a `T x N` matrix as CSV with a `sbs0,sbs1,...` header.
pub fn write_matrix_csv(path: &Path, matrix: &[f64], n: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..n).map(|k| format!("sbs{k}")))?;
    for row in matrix.chunks_exact(n) {
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

pub const ADVERSARIAL_VARIANTS: usize = 10;

/// Built-in oblivious loss families used to stress the batched learner.
///
/// All entries lie in `[0, e_max]`.
pub fn adversarial_matrix(variant: usize, n: usize, horizon: usize, e_max: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::config("adversarial families need at least two SBSs"));
    }
    let t_f = horizon as f64;
    let mut m = vec![0.0; n * horizon];
    let perm: Vec<usize> = {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            p.swap(i, rng.index(i + 1));
        }
        p
    };
    let mut set = |t: usize, a: usize, v: f64| m[t * n + perm[a]] = v.clamp(0.0, 1.0) * e_max;
    match variant {
        // one good SBS, fixed gap
        0 => (0..horizon).for_each(|t| (0..n).for_each(|a| set(t, a, if a == 0 { 0.2 } else { 0.7 }))),
        // Bernoulli losses with spread means
        1 => (0..horizon).for_each(|t| {
            (0..n).for_each(|a| {
                let mean = 0.3 + 0.4 * a as f64 / (n - 1) as f64;
                set(t, a, if rng.bernoulli(mean) { 1.0 } else { 0.0 })
            })
        }),
        // best SBS rotates every tenth of the horizon
        2 => (0..horizon).for_each(|t| {
            let best = (10 * t / horizon) % n;
            (0..n).for_each(|a| set(t, a, if a == best { 0.1 } else { 0.6 }))
        }),
        // phase-shifted sinusoids
        3 => (0..horizon).for_each(|t| {
            (0..n).for_each(|a| {
                let phase = std::f64::consts::TAU * (t as f64 / 997.0 + a as f64 / n as f64);
                set(t, a, 0.5 + 0.45 * phase.sin())
            })
        }),
        // early leader collapses after a third of the horizon
        4 => (0..horizon).for_each(|t| {
            (0..n).for_each(|a| {
                let v = match a {
                    0 if 3 * t < horizon => 0.0,
                    0 => 1.0,
                    1 => 0.45,
                    _ => 0.6,
                };
                set(t, a, v)
            })
        }),
        // pure noise
        5 => (0..horizon).for_each(|t| (0..n).for_each(|a| set(t, a, rng.uniform()))),
        // ping-pong: two SBSs alternate being perfect every slot
        6 => (0..horizon).for_each(|t| {
            (0..n).for_each(|a| {
                let v = match a {
                    0 => (t % 2) as f64,
                    1 => ((t + 1) % 2) as f64,
                    _ => 0.55,
                };
                set(t, a, v)
            })
        }),
        // small gap buried in noise
        7 => {
            let gap = (n as f64 / t_f).sqrt().min(0.1) * 4.0;
            (0..horizon).for_each(|t| {
                (0..n).for_each(|a| {
                    let mean = if a == 0 { 0.5 - gap } else { 0.5 };
                    set(t, a, mean + 0.3 * (2.0 * rng.uniform() - 1.0))
                })
            })
        }
        // bursts: each SBS suffers random high-loss bursts
        8 => {
            let mut burst = vec![0usize; n];
            for t in 0..horizon {
                for a in 0..n {
                    if burst[a] == 0 && rng.bernoulli(0.002 * (a + 1) as f64) {
                        burst[a] = 50 + rng.index(200);
                    }
                    let v = if burst[a] > 0 {
                        burst[a] -= 1;
                        0.95
                    } else {
                        0.15
                    };
                    set(t, a, v);
                }
            }
        }
        // leader changes on a doubling schedule
        9 => (0..horizon).for_each(|t| {
            let epoch = (usize::BITS - (t + 1).leading_zeros()) as usize;
            let best = epoch % n;
            (0..n).for_each(|a| set(t, a, if a == best { 0.25 } else { 0.55 }))
        }),
        _ => return Err(Error::config(format!("unknown adversarial variant {variant}"))),
    }
    Ok(m)
}

/// One piece of feedback: the observed energy (handover charge included) of `slot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub slot: usize,
    pub value: f64,
}

/// Constant delay: feedback for slot `s` arrives at slot `s + d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayChannel {
    pub d: usize,
}

/// Independent per-slot loss of feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissChannel {
    pub p_miss: f64,
}

/// Delay and loss combined; loss is decided when feedback is emitted.
#[derive(Debug, Clone)]
pub struct FeedbackChannel {
    delay: DelayChannel,
    miss: MissChannel,
    pending: VecDeque<Feedback>,
    kept: Vec<bool>,
    rng: RngStream,
}

impl FeedbackChannel {
    pub fn new(delay: DelayChannel, miss: MissChannel, rng: RngStream) -> Result<Self> {
        if !(0.0..1.0).contains(&miss.p_miss) {
            return Err(Error::config("p_miss must lie in [0,1)"));
        }
        Ok(FeedbackChannel { delay, miss, pending: VecDeque::new(), kept: Vec::new(), rng })
    }

    pub fn delay(&self) -> usize {
        self.delay.d
    }

    /// Slots are emitted in order starting at 1.
    pub fn emit(&mut self, slot: usize, value: f64) {
        let kept = !(self.miss.p_miss > 0.0 && self.rng.bernoulli(self.miss.p_miss));
        debug_assert_eq!(self.kept.len() + 1, slot);
        self.kept.push(kept);
        if kept {
            self.pending.push_back(Feedback { slot, value });
        }
    }

    /// Feedback due by the end of slot `t`.
    pub fn deliver(&mut self, t: usize) -> Vec<Feedback> {
        let mut out = Vec::new();
        while self.pending.front().is_some_and(|f| f.slot + self.delay.d <= t) {
            out.push(self.pending.pop_front().expect("front exists"));
        }
        out
    }

    /// Whether the feedback of an emitted slot survived the loss channel.
    pub fn was_kept(&self, slot: usize) -> Option<bool> {
        slot.checked_sub(1).and_then(|i| self.kept.get(i).copied())
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

#[derive(Debug, Clone)]
pub enum AvailabilityProcess {
    AlwaysOn(usize),
    Iid(Vec<f64>),
    Adaptive(usize),
    Scripted(Vec<AvailableSet>),
}

impl AvailabilityProcess {
    pub fn from_spec(spec: &AvailabilitySpec, n: usize) -> Self {
        match spec {
            AvailabilitySpec::AlwaysOn => AvailabilityProcess::AlwaysOn(n),
            AvailabilitySpec::Iid { p_on } => AvailabilityProcess::Iid(p_on.clone()),
            AvailabilitySpec::Adaptive => AvailabilityProcess::Adaptive(n),
            AvailabilitySpec::Scripted { sets } => {
                AvailabilityProcess::Scripted(sets.iter().map(|s| AvailableSet::from_ids(s.iter().copied())).collect())
            }
        }
    }

    /// On-set for slot `t` (1-based), given the action played at `t - 1`.
    /// An i.i.d. draw with nothing on is redrawn.
    pub fn draw(&self, t: usize, previous: Option<SbsId>, rng: &mut RngStream) -> AvailableSet {
        match self {
            AvailabilityProcess::AlwaysOn(n) => AvailableSet::all(*n),
            AvailabilityProcess::Iid(p) => loop {
                let mut s = AvailableSet::empty();
                for (a, &pa) in p.iter().enumerate() {
                    if rng.bernoulli(pa) {
                        s.insert(SbsId(a));
                    }
                }
                if !s.is_empty() {
                    break s;
                }
            },
            AvailabilityProcess::Adaptive(n) => {
                let mut s = AvailableSet::all(*n);
                if let Some(a) = previous {
                    s.remove(a);
                }
                s
            }
            AvailabilityProcess::Scripted(sets) => sets[(t - 1) % sets.len()],
        }
    }
}

/// What one slot produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub t: usize,
    pub cost: SlotCost,
    /// Feedback delivered during this slot (possibly for earlier slots).
    pub delivered: Vec<Feedback>,
    pub next_available: AvailableSet,
}

/// One running instance of a scenario.
#[derive(Debug, Clone)]
pub struct Environment {
    n: usize,
    horizon: usize,
    handover_cost: f64,
    lag: usize,
    matrix: Arc<Vec<f64>>,
    availability: AvailabilityProcess,
    avail_rng: RngStream,
    channel: FeedbackChannel,
    t: usize,
    available: AvailableSet,
    last_action: Option<SbsId>,
    measurement: Option<usize>,
    history: Vec<AvailableSet>,
}

impl Environment {
    /// `rep_seed` keys the availability and feedback-loss streams.
    pub fn new(scenario: &Scenario, matrix: Arc<Vec<f64>>, horizon: usize, rep_seed: u64) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.n_sbs;
        if matrix.len() < n * horizon {
            return Err(Error::config("loss matrix shorter than the horizon"));
        }
        let availability = AvailabilityProcess::from_spec(&scenario.availability, n);
        let mut avail_rng = RngStream::new(rep_seed, stream_id(&[label("availability")]));
        let channel = FeedbackChannel::new(
            DelayChannel { d: scenario.channel.delay },
            MissChannel { p_miss: scenario.channel.p_miss },
            RngStream::new(rep_seed, stream_id(&[label("channel")])),
        )?;
        let available = availability.draw(1, None, &mut avail_rng);
        let mut env = Environment {
            n,
            horizon,
            handover_cost: scenario.handover_cost,
            lag: scenario.measurement_lag,
            matrix,
            availability,
            avail_rng,
            channel,
            t: 1,
            available,
            last_action: None,
            measurement: None,
            history: vec![available],
        };
        env.refresh_measurement();
        Ok(env)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn handover_cost(&self) -> f64 {
        self.handover_cost
    }

    /// The next slot to be played (1-based).
    pub fn slot(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t > self.horizon
    }

    pub fn available(&self) -> AvailableSet {
        self.available
    }

    pub fn matrix(&self) -> &Arc<Vec<f64>> {
        &self.matrix
    }

    /// On-sets of every slot reached so far.
    pub fn availability_history(&self) -> &[AvailableSet] {
        &self.history
    }

    pub fn energy(&self, t: usize, a: SbsId) -> f64 {
        self.matrix[(t - 1) * self.n + a.index()]
    }

    /// Per-SBS measurement vector available before playing the current slot,
    /// if any has arrived yet.
    pub fn measurements(&self) -> Option<&[f64]> {
        self.measurement.map(|s| &self.matrix[(s - 1) * self.n..s * self.n])
    }

    fn refresh_measurement(&mut self) {
        let Some(s) = self.t.checked_sub(self.lag + self.channel.delay()).filter(|&s| s >= 1) else {
            return;
        };
        if s > self.horizon {
            return;
        }
        // a row whose feedback was lost leaves the previous measurement in place
        if self.channel.was_kept(s).unwrap_or(true) {
            self.measurement = Some(s);
        }
    }

    pub fn step(&mut self, action: SbsId) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::Protocol("step past the horizon".into()));
        }
        if action.index() >= self.n || !self.available.contains(action) {
            return Err(Error::Protocol(format!("SBS {action} is not on at slot {}", self.t)));
        }
        let t = self.t;
        let switched = self.last_action.is_some_and(|p| p != action);
        let cost = SlotCost::new(self.energy(t, action), switched, self.handover_cost);
        self.channel.emit(t, cost.total());
        let delivered = self.channel.deliver(t);
        self.last_action = Some(action);
        self.t += 1;
        let next_available = if self.is_done() {
            self.available
        } else {
            let s = self.availability.draw(self.t, Some(action), &mut self.avail_rng);
            self.history.push(s);
            s
        };
        self.available = next_available;
        self.refresh_measurement();
        Ok(StepOutcome { t, cost, delivered, next_available })
    }
}

/// Availability adversary that forces a handover every slot.
///
/// Losses are uniform on `[0, e_max]`; the handover cost must be at least
/// `e_max + 1/(N-1)`. Losses and costs are in raw units whose sum stays within one.
pub fn forced_handover_scenario(n: usize, horizon: usize, handover_cost: f64, e_max: f64) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::config("the forced-handover adversary needs N >= 2"));
    }
    if handover_cost < e_max + 1.0 / (n - 1) as f64 - 1e-12 {
        return Err(Error::config(format!(
            "forced-handover premise violated: handover cost {handover_cost} < e_max + 1/(N-1) = {}",
            e_max + 1.0 / (n - 1) as f64
        )));
    }
    if !(e_max > 0.0 && e_max + handover_cost <= 1.0) {
        return Err(Error::config("need 0 < e_max and e_max + handover cost <= 1"));
    }
    let mut sc = Scenario::new("forced-handover", n, handover_cost, GeneratorSpec::Uniform { low: 0.0, high: e_max })
        .with_availability(AvailabilitySpec::Adaptive);
    sc.horizon = Some(horizon);
    Ok(sc)
}
