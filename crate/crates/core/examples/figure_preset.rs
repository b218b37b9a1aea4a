//! Runs a figure preset at a reduced horizon and prints the final per-slot
//! cost of each algorithm.

use udn_mobility::cli::{cmd_run, ExperimentConfig};
use udn_mobility::Result;

fn main() -> Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig3".into());
    let cfg = ExperimentConfig {
        horizon: Some(5_000),
        reps: 3,
        out: std::env::temp_dir().join(format!("udn-preset-{name}")),
        ..ExperimentConfig::preset(&name)?
    };
    for res in cmd_run(&cfg)? {
        println!("{}", res.id);
        for a in &res.algos {
            let last = a.curve.last().expect("non-empty curve");
            println!("  {:>24}: per-slot cost {:.4}", a.label, last.mean_cum_cost / last.t as f64);
        }
    }
    println!("CSVs in {}", cfg.out.display());
    Ok(())
}
