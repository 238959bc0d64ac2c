//! Simulates one replication of a bundled preset and prints its KPIs.
//!
//!     cargo run --release --example single_run -- ww-like 0

use storesim::harness::{run_replication_with, ScenarioConfig};
use storesim::metrics::KPI_NAMES;
use storesim::RunOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "ww-like".into());
    let index: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let config = ScenarioConfig::preset(&preset)?;
    let started = std::time::Instant::now();
    let out = run_replication_with(&config, index, RunOptions::default())?;
    println!("{preset} replication {index} (seed {}) in {:.2?}", out.seed, started.elapsed());
    for (name, value) in KPI_NAMES.iter().zip(out.record.kpi_values()) {
        println!("  {name:<24} {value:>12.3}");
    }
    println!("  neutral by week: {:?}", out.record.weekly_neutral);
    Ok(())
}
