use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use udn_mobility::cli::{cmd_run, cmd_verify, ExperimentConfig, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_OK, OUT_DIR_ENV};
use udn_mobility::policy::AlgoSpec;

#[derive(Parser)]
#[command(name = "udn-mobility", version, about = "Mobility-management learners and UDN simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from a scenario file or a figure preset and write CSVs.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// fig3, fig4, fig5, fig6 or fig7.
        #[arg(long)]
        preset: Option<String>,
        /// Algorithm as `name[:key=value,...]`; repeatable.
        #[arg(long = "algo")]
        algos: Vec<AlgoSpec>,
        #[arg(long = "T")]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
        /// Record every `stride`-th slot in the trace.
        #[arg(long, default_value_t = 100)]
        stride: usize,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        /// Only criteria whose id or name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let code = match cli.command {
        Command::Run { scenario, preset, algos, horizon, reps, seed, out, stride } => {
            let cfg = ExperimentConfig { scenario, preset, algos, horizon, reps, seed, out, stride };
            match cmd_run(&cfg) {
                Ok(results) => {
                    for res in &results {
                        for a in &res.algos {
                            let bound =
                                a.bound.as_ref().map(|b| format!("  bound {:.1} {}", b.bound, if b.pass { "ok" } else { "VIOLATED" }));
                            println!(
                                "{:<28} {:<20} regret {:>10.2} ± {:.2}{}",
                                res.id,
                                a.label,
                                a.mean_regret,
                                a.se,
                                bound.unwrap_or_default()
                            );
                        }
                    }
                    println!("wrote {}", cfg.out.display());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Command::Verify { filter } => match cmd_verify(filter.as_deref(), &mut std::io::stdout()) {
            Ok(true) => EXIT_OK,
            Ok(false) => EXIT_ACCEPTANCE,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
