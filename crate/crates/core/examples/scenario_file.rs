//! Loads a TOML scenario, runs several algorithms on it, and writes the
//! trace, summary and curve CSVs.

use std::path::PathBuf;

use udn_mobility::env::Scenario;
use udn_mobility::harness::{run_experiment, write_outputs, ExperimentSpec};
use udn_mobility::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/onoff.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("udn-scenario-example"));
    let sc = Scenario::load(&path)?;
    let horizon = sc.horizon.unwrap_or(10_000);
    let algos = ["cre", "re", "ext-macro", "macro"].iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
    let spec = ExperimentSpec::new(sc.name.clone(), sc, algos, horizon).reps(5);
    let res = run_experiment(&spec)?;
    for a in &res.algos {
        println!("{:>10}: mean cost {:>9.1}, mean regret {:>8.1} ({:?})", a.label, a.mean_total_cost(), a.mean_regret, a.regret_kind);
    }
    write_outputs(&out, &[res])?;
    println!("wrote trace.csv, summary.csv and curves.csv to {}", out.display());
    Ok(())
}
