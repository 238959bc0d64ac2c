//! Ranks scenario parameters by the elasticity of transactions to a ±10%
//! change and writes sensitivity.csv.
//!
//!     cargo run --release --example sensitivity -- atv-like 10 /tmp/sens

use std::path::PathBuf;

use storesim::harness::{sensitivity_sweep, write_sensitivity, ScenarioConfig};

const PARAMETERS: [&str; 9] = [
    "probabilities.conversion_rate",
    "probabilities.ask_help",
    "probabilities.ask_refund",
    "durations.browse.mode",
    "durations.help_l1.mode",
    "durations.till.mode",
    "durations.patience.mode",
    "refunds.empowerment",
    "footfall_scale",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "ww-like".into());
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let out = args.next().map(PathBuf::from).unwrap_or_else(std::env::temp_dir);

    let config = ScenarioConfig::preset(&preset)?;
    let rows = sensitivity_sweep(&config, &PARAMETERS, 0.1, reps)?;
    for r in &rows {
        println!(
            "{:>2} {:<30} {:>9.3} -> {:>9.3} .. {:>9.3}  elasticity {:>7.3}",
            r.rank, r.parameter, r.base_value, r.low_value, r.high_value, r.elasticity
        );
    }
    println!("wrote {}", write_sensitivity(&rows, &out)?.display());
    Ok(())
}
