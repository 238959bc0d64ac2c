//! Factor sweeps with replications. Every level reuses the same replication
//! seeds, so levels are compared under common random numbers.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::engine::replication_seed;
use crate::harness::stats::{summarize, Summary};
use crate::harness::{run_replication, HarnessError, ScenarioConfig, Staffing};
use crate::metrics::MetricsRecord;
use crate::population::CustomerMix;

/// A factor level to run: label, numeric value for plotting, and the full
/// config.
#[derive(Clone, Debug)]
pub struct LevelSpec {
    pub label: String,
    pub value: f64,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelResult {
    pub label: String,
    pub value: f64,
    #[serde(skip)]
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub records: Vec<MetricsRecord>,
    /// Extra per-replication values computed after the runs, e.g. ratios to
    /// a baseline level.
    #[serde(skip)]
    pub derived: Vec<(String, Vec<f64>)>,
}

impl LevelResult {
    pub fn values(&self, kpi: &str) -> Vec<f64> {
        if let Some((_, v)) = self.derived.iter().find(|(n, _)| n == kpi) {
            return v.clone();
        }
        self.records.iter().map(|r| r.kpi(kpi).unwrap_or_else(|| panic!("unknown KPI {kpi}"))).collect()
    }

    pub fn summary(&self, kpi: &str) -> Summary {
        summarize(&self.values(kpi))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub experiment: String,
    pub factor: String,
    pub master_seed: u64,
    pub replications: usize,
    pub levels: Vec<LevelResult>,
}

impl ExperimentResult {
    pub fn level(&self, label: &str) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.label == label)
    }

    pub fn derived_names(&self) -> Vec<String> {
        self.levels.first().map(|l| l.derived.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default()
    }
}

/// Runs every (level, replication) pair, in parallel, and collects the
/// results ordered by level then replication.
pub fn run_levels(
    experiment: &str,
    factor: &str,
    levels: Vec<LevelSpec>,
    replications: usize,
) -> Result<ExperimentResult, HarnessError> {
    if replications == 0 {
        return Err(HarnessError::InvalidExperiment("replication count must be positive".into()));
    }
    let master_seed = levels.first().map_or(0, |l| l.config.seed);
    for level in &levels {
        level.config.validate()?;
    }
    let jobs: Vec<(usize, usize)> =
        (0..levels.len()).flat_map(|l| (0..replications).map(move |r| (l, r))).collect();
    let records: Vec<MetricsRecord> = jobs
        .par_iter()
        .map(|&(l, r)| run_replication(&levels[l].config, r as u64))
        .collect::<Result<_, _>>()?;
    let mut records = records.into_iter();
    let levels = levels
        .into_iter()
        .map(|spec| LevelResult {
            seeds: (0..replications as u64).map(|r| replication_seed(spec.config.seed, r)).collect(),
            records: records.by_ref().take(replications).collect(),
            label: spec.label,
            value: spec.value,
            config: spec.config,
            derived: vec![],
        })
        .collect();
    Ok(ExperimentResult {
        experiment: experiment.into(),
        factor: factor.into(),
        master_seed,
        replications,
        levels,
    })
}

/// Cashier sweep at constant total staff; the remainder sell.
pub fn experiment_staff_mix(
    config: &ScenarioConfig,
    cashiers: impl IntoIterator<Item = u32>,
    total_staff: u32,
    replications: usize,
) -> Result<ExperimentResult, HarnessError> {
    let mut levels = vec![];
    for c in cashiers {
        if c > total_staff {
            return Err(HarnessError::InvalidExperiment(format!(
                "{c} cashiers exceed the total of {total_staff} staff"
            )));
        }
        let mut cfg = config.clone();
        cfg.staffing = Staffing::split(total_staff, c, config.staffing.managers);
        levels.push(LevelSpec { label: format!("cashiers={c}"), value: f64::from(c), config: cfg });
    }
    run_levels("staff_mix", "cashiers", levels, replications)
}

pub fn experiment_empowerment(
    config: &ScenarioConfig,
    levels: &[f64],
    replications: usize,
) -> Result<ExperimentResult, HarnessError> {
    let specs = levels
        .iter()
        .map(|&e| {
            if !(0.0..=1.0).contains(&e) {
                return Err(HarnessError::InvalidExperiment(format!("empowerment level {e} outside [0, 1]")));
            }
            let mut cfg = config.clone();
            cfg.refunds.empowerment = e;
            Ok(LevelSpec { label: format!("empowerment={e}"), value: e, config: cfg })
        })
        .collect::<Result<Vec<_>, _>>()?;
    run_levels("empowerment", "empowerment", specs, replications)
}

/// Runs the baseline mix first, then each named mix, and attaches the
/// per-replication ratio of transactions to the baseline.
pub fn experiment_customer_mix(
    config: &ScenarioConfig,
    baseline: &CustomerMix,
    mixes: &[(String, CustomerMix)],
    replications: usize,
) -> Result<ExperimentResult, HarnessError> {
    let mut specs = vec![];
    for (i, (label, mix)) in
        std::iter::once(("baseline".to_string(), baseline.clone())).chain(mixes.iter().cloned()).enumerate()
    {
        mix.validate().map_err(|e| HarnessError::InvalidExperiment(format!("mix {label}: {e}")))?;
        let mut cfg = config.clone();
        cfg.population.mix = mix;
        specs.push(LevelSpec { label, value: i as f64, config: cfg });
    }
    let mut result = run_levels("customer_mix", "mix", specs, replications)?;
    let base = result.levels[0].values("transactions");
    for level in &mut result.levels {
        let ratios = level
            .values("transactions")
            .iter()
            .zip(&base)
            .map(|(t, b)| if *b > 0.0 { t / b } else { f64::NAN })
            .collect();
        level.derived.push(("transactions_ratio".into(), ratios));
    }
    Ok(result)
}

/// Leaf paths whose values differ between two configs.
pub fn config_diff(a: &ScenarioConfig, b: &ScenarioConfig) -> Vec<String> {
    fn walk(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
        match (a, b) {
            (Value::Object(x), Value::Object(y)) => {
                let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
                for k in keys {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(&p, x.get(k).unwrap_or(&Value::Null), y.get(k).unwrap_or(&Value::Null), out);
                }
            }
            (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    walk(&format!("{path}.{i}"), u, v, out);
                }
            }
            _ if a != b => out.push(path.to_string()),
            _ => {}
        }
    }
    let mut out = vec![];
    let a = serde_json::to_value(a).expect("config serializes");
    let b = serde_json::to_value(b).expect("config serializes");
    walk("", &a, &b, &mut out);
    out
}
