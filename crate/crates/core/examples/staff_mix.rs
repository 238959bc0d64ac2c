//! Cashier sweep at ten floor staff: how transactions and satisfied
//! customers respond to moving people between the tills and the floor.
//!
//!     cargo run --release --example staff_mix -- atv-like 20

use storesim::harness::{experiment_staff_mix, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "ww-like".into());
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    let config = ScenarioConfig::preset(&preset)?;
    let started = std::time::Instant::now();
    let result = experiment_staff_mix(&config, 1..=7, 10, reps)?;
    println!("{preset}: {reps} replications per level in {:.2?}", started.elapsed());
    println!("{:>9} {:>22} {:>18} {:>9} {:>9}", "cashiers", "transactions", "satisfied", "util_c", "util_l1");
    for level in &result.levels {
        let t = level.summary("transactions");
        let s = level.summary("satisfied");
        println!(
            "{:>9} {:>12.1} ± {:>7.1} {:>9.1} ± {:>5.1} {:>9.3} {:>9.3}",
            level.value,
            t.mean,
            t.ci95_half_width,
            s.mean,
            s.ci95_half_width,
            level.summary("util_cashier").mean,
            level.summary("util_seller_l1").mean,
        );
    }
    Ok(())
}
