//! Scenario ingestion, replication runner, experiment protocols,
//! sensitivity sweeps and result files.

mod config;
mod experiments;
mod output;
mod sensitivity;
mod stats;

pub use config::{
    CalendarConfig, ConfigError, DayHours, Durations, FootfallConfig, Issue, PopulationConfig, Probabilities,
    RefundPolicy, ScenarioConfig, Staffing, PRESETS,
};
pub use experiments::{
    config_diff, experiment_customer_mix, experiment_empowerment, experiment_staff_mix, run_levels,
    ExperimentResult, LevelResult, LevelSpec,
};
pub use output::{gnuplot_table, write_results, write_sensitivity, AGGREGATE_HEADER, PER_REPLICATION_PREFIX};
pub use sensitivity::{get_parameter, sensitivity_sweep, with_parameter, SensitivityRow};
pub use stats::{summarize, Summary};

use thiserror::Error;

use crate::agents::{Department, LogEntry, ModelError, RunOptions};
use crate::engine::replication_seed;
use crate::metrics::{AuditError, MetricsRecord};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "STORESIM_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("parameter {0:?} is not numeric")]
    NonNumericParameter(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub seed: u64,
    pub record: MetricsRecord,
    pub log: Vec<LogEntry>,
}

impl RunOutput {
    /// The event log as text, one line per entry.
    pub fn log_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.log {
            out.push_str(&entry.to_string());
            out.push('\n');
        }
        out
    }
}

/// Simulates one full lifespan with an explicit seed.
pub fn run_with_seed(
    config: &ScenarioConfig,
    seed: u64,
    options: RunOptions,
) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let mut dept = Department::new(config, seed, options)?;
    dept.run()?;
    let record = dept.finalize()?;
    Ok(RunOutput { seed, record, log: dept.take_log() })
}

pub fn run_replication_with(
    config: &ScenarioConfig,
    index: u64,
    options: RunOptions,
) -> Result<RunOutput, HarnessError> {
    run_with_seed(config, replication_seed(config.seed, index), options)
}

/// Replication `index` of `config`; the seed comes from the config's master
/// seed and the index alone.
pub fn run_replication(config: &ScenarioConfig, index: u64) -> Result<MetricsRecord, HarnessError> {
    Ok(run_replication_with(config, index, RunOptions::default())?.record)
}
