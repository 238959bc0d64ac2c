//! Result files.
//!
//! `per_replication.csv` has one row per (level, replication) with
//! [`PER_REPLICATION_PREFIX`] followed by every KPI in
//! [`crate::metrics::KPI_NAMES`] order and any derived columns.
//! `aggregate.csv` is long-format with [`AGGREGATE_HEADER`]. `manifest.json`
//! holds the full config of every level and the seeds used.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::harness::{summarize, ExperimentResult, HarnessError, SensitivityRow};
use crate::metrics::KPI_NAMES;

pub const PER_REPLICATION_PREFIX: [&str; 5] = ["experiment", "level", "factor_value", "replication", "seed"];
pub const AGGREGATE_HEADER: [&str; 8] =
    ["experiment", "level", "factor_value", "kpi", "n", "mean", "std_dev", "ci95_half_width"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.display().to_string(), source }
}

/// Writes the three result files into `dir` and returns their paths.
pub fn write_results(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let derived = result.derived_names();

    let per_rep = dir.join("per_replication.csv");
    let mut w = csv::Writer::from_path(&per_rep).map_err(csv_err(&per_rep))?;
    let header: Vec<&str> = PER_REPLICATION_PREFIX
        .iter()
        .copied()
        .chain(KPI_NAMES)
        .chain(derived.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(csv_err(&per_rep))?;
    for level in &result.levels {
        for (r, record) in level.records.iter().enumerate() {
            let mut row = vec![
                result.experiment.clone(),
                level.label.clone(),
                level.value.to_string(),
                r.to_string(),
                level.seeds[r].to_string(),
            ];
            row.extend(record.kpi_values().iter().map(f64::to_string));
            for (_, values) in &level.derived {
                row.push(values[r].to_string());
            }
            w.write_record(&row).map_err(csv_err(&per_rep))?;
        }
    }
    w.flush().map_err(io_err(&per_rep))?;

    let agg = dir.join("aggregate.csv");
    let mut w = csv::Writer::from_path(&agg).map_err(csv_err(&agg))?;
    w.write_record(AGGREGATE_HEADER).map_err(csv_err(&agg))?;
    for level in &result.levels {
        for kpi in KPI_NAMES.iter().copied().chain(derived.iter().map(String::as_str)) {
            let s = summarize(&level.values(kpi));
            w.write_record([
                result.experiment.clone(),
                level.label.clone(),
                level.value.to_string(),
                kpi.to_string(),
                s.n.to_string(),
                s.mean.to_string(),
                s.std_dev.to_string(),
                s.ci95_half_width.to_string(),
            ])
            .map_err(csv_err(&agg))?;
        }
    }
    w.flush().map_err(io_err(&agg))?;

    let manifest = dir.join("manifest.json");
    let levels: Vec<_> = result
        .levels
        .iter()
        .map(|l| {
            json!({
                "label": l.label,
                "factor_value": l.value,
                "seeds": l.seeds,
                "config": l.config,
            })
        })
        .collect();
    let body = json!({
        "experiment": result.experiment,
        "factor": result.factor,
        "master_seed": result.master_seed,
        "replications": result.replications,
        "kpis": KPI_NAMES,
        "levels": levels,
    });
    let text = serde_json::to_string_pretty(&body).expect("manifest serializes");
    fs::write(&manifest, text + "\n").map_err(io_err(&manifest))?;

    Ok(vec![per_rep, agg, manifest])
}

pub fn write_sensitivity(rows: &[SensitivityRow], dir: &Path) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("sensitivity.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// Whitespace-separated `factor_value mean lower upper` rows for one KPI
/// of an `aggregate.csv`, ready for gnuplot's `with yerrorlines`.
pub fn gnuplot_table(aggregate_csv: &Path, kpi: &str) -> Result<String, HarnessError> {
    let mut r = csv::Reader::from_path(aggregate_csv).map_err(csv_err(aggregate_csv))?;
    let mut out = format!("# {kpi}\n# level factor_value mean lower upper\n");
    for row in r.records() {
        let row = row.map_err(csv_err(aggregate_csv))?;
        if &row[3] != kpi {
            continue;
        }
        let mean: f64 = row[5].parse().unwrap_or(f64::NAN);
        let half: f64 = row[7].parse().unwrap_or(f64::NAN);
        out.push_str(&format!("\"{}\" {} {} {} {}\n", &row[1], &row[2], mean, mean - half, mean + half));
    }
    Ok(out)
}
