//! Watches one evening: who is still inside when the doors close, and how
//! long the department takes to empty.
//!
//!     cargo run --release --example closing_time -- ww-like 0

use storesim::agents::{LogEntry, StoreEvent};
use storesim::engine::replication_seed;
use storesim::harness::ScenarioConfig;
use storesim::{Department, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "ww-like".into());
    let index: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let mut config = ScenarioConfig::preset(&preset)?;
    config.lifespan_weeks = 1;
    let options = RunOptions { record_log: true, ..RunOptions::default() };
    let mut dept = Department::new(&config, replication_seed(config.seed, index), options)?;
    // Saturday, the busiest day
    let saturday = dept.calendar().open_interval(5).expect("open on Saturday");
    dept.run_until(saturday.1)?;
    println!("Saturday closes at minute {}: {} customers inside", saturday.1, dept.pool().in_store());
    println!("queued: {}", dept.queues().total_waiting());
    let before = dept.log().len();
    dept.run_until(saturday.1.plus(20.0))?;
    for entry in &dept.log()[before..] {
        match entry {
            LogEntry::Dispatch { event: StoreEvent::Arrival | StoreEvent::ArrivalCheck, .. } => {}
            other => println!("  {other}"),
        }
    }
    println!("inside 20 minutes later: {}", dept.pool().in_store());
    dept.run()?;
    let record = dept.finalize()?;
    println!(
        "over the week the slowest evening emptied in {:.2} minutes; {} customers were mid-purchase at close",
        record.max_minutes_to_empty, record.committed_at_close
    );
    Ok(())
}
