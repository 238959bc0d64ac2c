//! One-at-a-time sensitivity of transactions to numeric scenario fields.
//!
//! Parameters are addressed by dotted paths into the scenario, e.g.
//! `probabilities.conversion_rate`, `durations.till.mode`,
//! `staffing.cashiers` or `footfall.saturday.12`.

use serde::Serialize;
use serde_json::Value;

use crate::harness::experiments::{run_levels, LevelSpec};
use crate::harness::{HarnessError, ScenarioConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub rank: usize,
    pub parameter: String,
    pub base_value: f64,
    pub low_value: f64,
    pub high_value: f64,
    pub base_transactions: f64,
    pub low_transactions: f64,
    pub high_transactions: f64,
    /// Relative change in transactions per relative change in the
    /// parameter (central difference).
    pub elasticity: f64,
}

fn lookup<'v>(root: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.').try_fold(root, |node, key| match node {
        Value::Object(map) => map.get(key),
        Value::Array(items) => items.get(key.parse::<usize>().ok()?),
        _ => None,
    })
}

fn lookup_mut<'v>(root: &'v mut Value, path: &str) -> Option<&'v mut Value> {
    path.split('.').try_fold(root, |node, key| match node {
        Value::Object(map) => map.get_mut(key),
        Value::Array(items) => items.get_mut(key.parse::<usize>().ok()?),
        _ => None,
    })
}

pub fn get_parameter(config: &ScenarioConfig, path: &str) -> Result<f64, HarnessError> {
    let root = serde_json::to_value(config).expect("config serializes");
    match lookup(&root, path) {
        None => Err(HarnessError::UnknownParameter(path.into())),
        Some(v) => v.as_f64().ok_or_else(|| HarnessError::NonNumericParameter(path.into())),
    }
}

/// Copy of `config` with the field at `path` set to `value`. Integer fields
/// are rounded. The result is validated.
pub fn with_parameter(
    config: &ScenarioConfig,
    path: &str,
    value: f64,
) -> Result<ScenarioConfig, HarnessError> {
    let mut root = serde_json::to_value(config).expect("config serializes");
    let slot = lookup_mut(&mut root, path).ok_or_else(|| HarnessError::UnknownParameter(path.into()))?;
    *slot = match slot {
        Value::Number(n) if n.is_u64() || n.is_i64() => {
            let rounded = value.round();
            if rounded < 0.0 {
                Value::from(rounded as i64)
            } else {
                Value::from(rounded as u64)
            }
        }
        Value::Number(_) => Value::from(value),
        _ => return Err(HarnessError::NonNumericParameter(path.into())),
    };
    let out: ScenarioConfig = serde_json::from_value(root)
        .map_err(|e| HarnessError::InvalidExperiment(format!("{path} = {value}: {e}")))?;
    out.validate()?;
    Ok(out)
}

/// Perturbs each parameter by ±`delta` (relative), runs `replications` per
/// level, and ranks parameters by |elasticity|.
pub fn sensitivity_sweep(
    config: &ScenarioConfig,
    parameters: &[&str],
    delta: f64,
    replications: usize,
) -> Result<Vec<SensitivityRow>, HarnessError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(HarnessError::InvalidExperiment(format!("delta {delta} must lie in [0, 1)")));
    }
    let mut specs = vec![LevelSpec { label: "base".into(), value: 0.0, config: config.clone() }];
    let mut bounds = vec![];
    for &p in parameters {
        let base = get_parameter(config, p)?;
        let low_cfg = with_parameter(config, p, base * (1.0 - delta))?;
        let high_cfg = with_parameter(config, p, base * (1.0 + delta))?;
        let low = get_parameter(&low_cfg, p)?;
        let high = get_parameter(&high_cfg, p)?;
        bounds.push((base, low, high));
        specs.push(LevelSpec { label: format!("{p}-"), value: low, config: low_cfg });
        specs.push(LevelSpec { label: format!("{p}+"), value: high, config: high_cfg });
    }
    let result = run_levels("sensitivity", "parameter", specs, replications)?;
    let mean = |i: usize| result.levels[i].summary("transactions").mean;
    let base_t = mean(0);
    let mut rows: Vec<SensitivityRow> = parameters
        .iter()
        .zip(bounds)
        .enumerate()
        .map(|(i, (&p, (base, low, high)))| {
            let (lo_t, hi_t) = (mean(1 + 2 * i), mean(2 + 2 * i));
            let elasticity = if high == low || base == 0.0 || base_t == 0.0 {
                0.0
            } else {
                ((hi_t - lo_t) / base_t) / ((high - low) / base)
            };
            SensitivityRow {
                rank: 0,
                parameter: p.to_string(),
                base_value: base,
                low_value: low,
                high_value: high,
                base_transactions: base_t,
                low_transactions: lo_t,
                high_transactions: hi_t,
                elasticity,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.elasticity.abs().total_cmp(&a.elasticity.abs()).then(a.parameter.cmp(&b.parameter))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_paths() {
        let c = ScenarioConfig::preset("ww-like").unwrap();
        assert_eq!(
            get_parameter(&c, "probabilities.conversion_rate").unwrap(),
            c.probabilities.conversion_rate
        );
        assert_eq!(get_parameter(&c, "durations.till.mode").unwrap(), c.durations.till.mode);
        assert_eq!(get_parameter(&c, "footfall.saturday.12").unwrap(), c.footfall.saturday[12]);
        assert!(matches!(get_parameter(&c, "probabilities.nope"), Err(HarnessError::UnknownParameter(_))));
        assert!(matches!(get_parameter(&c, "name"), Err(HarnessError::NonNumericParameter(_))));
    }

    #[test]
    fn integer_fields_are_rounded() {
        let c = ScenarioConfig::preset("ww-like").unwrap();
        let d = with_parameter(&c, "staffing.cashiers", 3.6).unwrap();
        assert_eq!(d.staffing.cashiers, 4);
        assert!(with_parameter(&c, "probabilities.conversion_rate", 1.4).is_err());
    }

    #[test]
    fn zero_delta_gives_zero_sensitivity() {
        let mut c = ScenarioConfig::preset("ww-like").unwrap();
        c.lifespan_weeks = 1;
        let rows =
            sensitivity_sweep(&c, &["probabilities.conversion_rate", "durations.till.mode"], 0.0, 2).unwrap();
        assert!(rows.iter().all(|r| r.elasticity == 0.0));
        assert!(sensitivity_sweep(&c, &["bogus.path"], 0.1, 1).is_err());
    }
}
