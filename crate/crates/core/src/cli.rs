//! Command-line plumbing: experiment configuration, figure presets, and the
//! `run` and `verify` commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::env::{AvailabilitySpec, ChannelSpec, GeneratorSpec, Scenario};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, write_outputs, ExperimentResult, ExperimentSpec};
use crate::policy::AlgoSpec;
use crate::udn::UdnConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ACCEPTANCE: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "UDN_MOBILITY_OUT";

pub const PRESETS: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];

pub const PRESET_HORIZON: usize = 100_000;
pub const PRESET_REPS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Option<PathBuf>,
    pub preset: Option<String>,
    pub algos: Vec<AlgoSpec>,
    pub horizon: Option<usize>,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: None,
            preset: None,
            algos: Vec::new(),
            horizon: None,
            reps: PRESET_REPS,
            seed: 1,
            out: default_out_dir(),
            stride: 100,
        }
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        preset_experiments(name, PRESET_HORIZON)?;
        Ok(ExperimentConfig { preset: Some(name.to_string()), ..Self::default() })
    }

    /// Expands the configuration into experiments.
    pub fn experiments(&self) -> Result<Vec<ExperimentSpec>> {
        let specs = match (&self.preset, &self.scenario) {
            (Some(_), Some(_)) => return Err(Error::config("give either --preset or --scenario, not both")),
            (None, None) => return Err(Error::config("give --preset or --scenario")),
            (Some(p), None) => {
                let mut specs = preset_experiments(p, self.horizon.unwrap_or(PRESET_HORIZON))?;
                if !self.algos.is_empty() {
                    specs.iter_mut().for_each(|s| s.algos = self.algos.clone());
                }
                specs
            }
            (None, Some(path)) => {
                if !path.exists() {
                    return Err(Error::config(format!("scenario file {} does not exist", path.display())));
                }
                let sc = Scenario::load(path)?;
                let horizon =
                    self.horizon.or(sc.horizon).ok_or_else(|| Error::config("no horizon: pass --T or set `horizon` in the scenario"))?;
                let id = if sc.name.is_empty() { stem(path) } else { sc.name.clone() };
                vec![ExperimentSpec::new(id, sc, self.algos.clone(), horizon)]
            }
        };
        let specs: Vec<ExperimentSpec> = specs.into_iter().map(|s| s.reps(self.reps).seed(self.seed).stride(self.stride)).collect();
        for s in &specs {
            s.validate()?;
            for a in &s.algos {
                a.build(&s.scenario, s.horizon)?;
            }
        }
        Ok(specs)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
}

fn udn_scenario(name: String, n: usize, handover_cost: f64) -> Scenario {
    Scenario::new(name, n, handover_cost, GeneratorSpec::Udn { udn: UdnConfig::default() })
}

fn brew_sweep() -> Vec<AlgoSpec> {
    vec![
        AlgoSpec::Brew { tau: None, gamma: None },
        AlgoSpec::Brew { tau: Some(5), gamma: None },
        AlgoSpec::Brew { tau: Some(30), gamma: None },
        "macro".parse().expect("valid"),
        "fho".parse().expect("valid"),
    ]
}

fn three_way(brew: AlgoSpec) -> Vec<AlgoSpec> {
    vec![brew, "macro".parse().expect("valid"), "fho".parse().expect("valid")]
}

/// The experiments behind one figure preset.
pub fn preset_experiments(name: &str, horizon: usize) -> Result<Vec<ExperimentSpec>> {
    let mut out = Vec::new();
    match name {
        "fig3" | "fig4" => {
            let n = if name == "fig3" { 6 } else { 12 };
            for e_s in [0.2, 0.4] {
                let id = format!("{name}-n{n}-es{e_s}");
                out.push(ExperimentSpec::new(id.clone(), udn_scenario(id, n, e_s), brew_sweep(), horizon));
            }
        }
        "fig5" => {
            for (n, e_s) in [(6, 0.2), (6, 0.4), (12, 0.2), (12, 0.4)] {
                for delay in [0, 2, 5] {
                    let id = format!("fig5-n{n}-es{e_s}-d{delay}");
                    let sc = udn_scenario(id.clone(), n, e_s).with_channel(ChannelSpec { delay, p_miss: 0.0 });
                    out.push(ExperimentSpec::new(id, sc, three_way(AlgoSpec::Brew { tau: None, gamma: None }), horizon));
                }
            }
        }
        "fig6" => {
            for (n, e_s) in [(6, 0.2), (6, 0.4), (12, 0.2), (12, 0.4)] {
                for p_miss in [0.0, 0.1, 0.3] {
                    let id = format!("fig6-n{n}-es{e_s}-pm{p_miss}");
                    let sc = udn_scenario(id.clone(), n, e_s).with_channel(ChannelSpec { delay: 0, p_miss });
                    out.push(ExperimentSpec::new(id, sc, three_way(AlgoSpec::BrewMissing { p: None, tau: None }), horizon));
                }
            }
        }
        "fig7" => {
            for p_off in [0.1, 0.3] {
                let id = format!("fig7-n4-poff{p_off}");
                let sc = udn_scenario(id.clone(), 4, 0.2).with_availability(AvailabilitySpec::Iid { p_on: vec![1.0 - p_off; 4] });
                out.push(ExperimentSpec::new(id, sc, vec![AlgoSpec::Cre, AlgoSpec::ExtendedMacro], horizon));
            }
        }
        other => return Err(Error::config(format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")))),
    }
    Ok(out)
}

/// Runs the configured experiments and writes `trace.csv`, `summary.csv`
/// and `curves.csv` into the output directory. Nothing is left behind on error.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    let specs = cfg.experiments()?;
    let results = specs.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    let existed = cfg.out.exists();
    if let Err(e) = write_outputs(&cfg.out, &results) {
        for f in ["trace.csv", "summary.csv", "curves.csv"] {
            let _ = std::fs::remove_file(cfg.out.join(f));
        }
        if !existed {
            let _ = std::fs::remove_dir(&cfg.out);
        }
        return Err(e);
    }
    Ok(results)
}

/// Runs the acceptance suite, printing one line per criterion. Returns
/// whether every selected criterion passed.
pub fn cmd_verify<W: Write>(filter: Option<&str>, out: &mut W) -> Result<bool> {
    let reports = crate::acceptance::run_criteria(filter, |r| {
        let _ = writeln!(out, "{}", crate::acceptance::format_report(r));
        let _ = out.flush();
    });
    if reports.is_empty() {
        return Err(Error::config(format!("no acceptance criterion matches {:?}", filter.unwrap_or(""))));
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    writeln!(out, "{passed}/{} criteria passed", reports.len())?;
    Ok(passed == reports.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand() {
        for p in PRESETS {
            let specs = preset_experiments(p, 1000).unwrap();
            assert!(!specs.is_empty());
            for s in &specs {
                s.validate().unwrap();
            }
        }
        assert!(matches!(preset_experiments("fig9", 10), Err(Error::Config(_))));
    }

    #[test]
    fn empty_algorithm_list_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(&path, "n_sbs = 2\nhorizon = 10\nhandover_cost = 0.1\n[generator]\nkind = \"constant\"\nmeans = [0.1, 0.9]\n")
            .unwrap();
        let cfg = ExperimentConfig { scenario: Some(path), out: dir.path().join("out"), ..ExperimentConfig::default() };
        assert!(matches!(cmd_run(&cfg), Err(Error::Config(_))));
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn missing_scenario_file_is_rejected() {
        let cfg =
            ExperimentConfig { scenario: Some("/nonexistent/s.toml".into()), algos: vec![AlgoSpec::Cre], ..ExperimentConfig::default() };
        assert!(matches!(cmd_run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn scenario_run_writes_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.toml");
        std::fs::write(&path, "n_sbs = 2\nhorizon = 300\nhandover_cost = 0.1\n[generator]\nkind = \"constant\"\nmeans = [0.1, 0.9]\n")
            .unwrap();
        let cfg = ExperimentConfig {
            scenario: Some(path),
            algos: vec!["brew".parse().unwrap(), "macro".parse().unwrap()],
            reps: 2,
            stride: 50,
            out: dir.path().join("out"),
            ..ExperimentConfig::default()
        };
        let res = cmd_run(&cfg).unwrap();
        assert_eq!(res[0].id, "gap");
        let summary = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
        let mut lines = summary.lines();
        assert_eq!(lines.next().unwrap(), "experiment_id,algo,T,mean_regret,se,bound,pass");
        assert!(lines.next().unwrap().starts_with("gap,brew,300,"));
        let trace = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
        // 2 algorithms x 2 reps x 6 rows, plus header
        assert_eq!(trace.lines().count(), 1 + 2 * 2 * 6);
    }
}
