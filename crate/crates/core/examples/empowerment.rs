//! How often refunds need a manager as cashiers are trusted with more of
//! them, and what that does to manager load and refund-seeker satisfaction.
//!
//!     cargo run --release --example empowerment -- ww-like 10

use storesim::harness::{experiment_empowerment, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "ww-like".into());
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let config = ScenarioConfig::preset(&preset)?;
    let result = experiment_empowerment(&config, &[0.0, 0.25, 0.5, 0.75, 1.0], reps)?;
    println!(
        "{:>11} {:>16} {:>12} {:>20}",
        "empowerment", "manager share", "util_mgr", "refund satisfaction"
    );
    for level in &result.levels {
        let sub: u64 = level.records.iter().map(|r| r.routed_sub_threshold).sum();
        let to_manager: u64 = level.records.iter().map(|r| r.routed_sub_threshold_to_manager).sum();
        let sat = level.summary("refund_satisfaction");
        println!(
            "{:>11} {:>16.4} {:>12.4} {:>12.3} ± {:.3}",
            level.value,
            to_manager as f64 / sub as f64,
            level.summary("util_manager").mean,
            sat.mean,
            sat.ci95_half_width
        );
    }
    Ok(())
}
