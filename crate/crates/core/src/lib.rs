//! Agent-based simulation of a retail department.
//!
//! Customers are drawn from a finite, typed pool according to hourly
//! footfall, browse, ask for help, buy or ask for refunds, and queue for
//! staff with matching expertise when nobody is free, reneging when their
//! patience runs out. Every service event moves the customer's integer
//! satisfaction index by a configured weight; the index persists across
//! visits.
//!
//! * [`engine`]: event scheduler, clock, calendar, seeded random streams.
//! * [`population`]: customer types, likelihood adjustment, samplers, pool.
//! * [`agents`]: customer statechart, staff, and the [`agents::Department`]
//!   that runs them.
//! * [`service`]: queues, reneging and staff re-allocation.
//! * [`metrics`]: satisfaction bookkeeping and the per-run KPI record.
//! * [`harness`]: scenario files, replications, experiments, output.

pub mod agents;
pub mod engine;
pub mod harness;
pub mod metrics;
pub mod population;
pub mod service;

pub use agents::{Department, RunOptions};
pub use harness::{run_replication, run_replication_with, HarnessError, ScenarioConfig};
pub use metrics::MetricsRecord;
