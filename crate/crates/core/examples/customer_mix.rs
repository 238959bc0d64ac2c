//! Transactions and satisfaction when the whole pool is one customer type,
//! relative to an even mix of all five.
//!
//!     cargo run --release --example customer_mix -- atv-like 20

use storesim::harness::{experiment_customer_mix, ScenarioConfig};
use storesim::population::{CustomerMix, CustomerType};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "ww-like".into());
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    let config = ScenarioConfig::preset(&preset)?;
    let mixes: Vec<(String, CustomerMix)> =
        CustomerType::ALL.iter().map(|&t| (t.name().to_string(), CustomerMix::only(t))).collect();
    let result = experiment_customer_mix(&config, &CustomerMix::even(), &mixes, reps)?;
    println!("{:<22} {:>20} {:>8} {:>10} {:>10}", "mix", "transactions", "ratio", "satisfied", "unsatisfied");
    for level in &result.levels {
        let t = level.summary("transactions");
        println!(
            "{:<22} {:>10.0} ± {:>7.0} {:>8.3} {:>10.0} {:>10.0}",
            level.label,
            t.mean,
            t.ci95_half_width,
            level.summary("transactions_ratio").mean,
            level.summary("satisfied").mean,
            level.summary("unsatisfied").mean,
        );
    }
    Ok(())
}
