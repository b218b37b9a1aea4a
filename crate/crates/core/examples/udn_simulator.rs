//! Runs the system-level simulator and writes the normalized energy matrix to
//! a CSV that a scenario file can load.

use std::path::PathBuf;

use udn_mobility::env::write_matrix_csv;
use udn_mobility::udn::{pathloss_db, simulate, UdnConfig};
use udn_mobility::Result;

fn main() -> Result<()> {
    let cfg = UdnConfig::default();
    let horizon = 2_000;
    let run = simulate(&cfg, horizon, 42)?;
    println!("pathloss at 10/50/100 m: {:.1} / {:.1} / {:.1} dB", pathloss_db(10.0)?, pathloss_db(50.0)?, pathloss_db(100.0)?);
    println!("raw energy scale E_max = {:.3e}", run.e_max_raw);
    for a in 0..run.n {
        let col: Vec<f64> = (0..horizon).map(|t| run.matrix[t * run.n + a]).collect();
        let mean = col.iter().sum::<f64>() / horizon as f64;
        println!("SBS {a}: mean normalized energy {mean:.3}");
    }
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("udn_energy.csv"));
    write_matrix_csv(&path, &run.matrix, run.n)?;
    println!("wrote {}", path.display());
    Ok(())
}
