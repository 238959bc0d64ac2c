//! Scenario files, result files, sensitivity and the command-line tool.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use storesim::harness::{
    experiment_staff_mix, run_levels, sensitivity_sweep, write_results, write_sensitivity, ConfigError,
    LevelSpec, ScenarioConfig, AGGREGATE_HEADER, OUT_DIR_ENV, PER_REPLICATION_PREFIX,
};
use storesim::metrics::KPI_NAMES;
use storesim::population::{CustomerMix, CustomerType, TriangularSpec};

fn short(name: &str) -> ScenarioConfig {
    let mut c = ScenarioConfig::preset(name).unwrap();
    c.lifespan_weeks = 1;
    c
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn result_file_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let result = experiment_staff_mix(&short("atv-like"), 2..=3, 10, 2).unwrap();
    write_results(&result, dir.path()).unwrap();

    let golden = "experiment,level,factor_value,replication,seed,entries,exits,transactions,refunds,\
refunds_via_manager,lost_footfall,satisfied,neutral,unsatisfied,very_dissatisfied,dissatisfied,neutral_5,\
satisfied_5,very_satisfied,overall_satisfaction,refund_seekers,refund_satisfaction,util_cashier,\
util_seller_l1,util_seller_l2,util_manager,manager_refund_fraction,reneges_help_l1,reneges_help_l2,\
reneges_till,reneges_refund,enqueued_help,enqueued_till,enqueued_refund,flushed_at_close,neutral_week1,\
max_minutes_to_empty";
    assert_eq!(header(&dir.path().join("per_replication.csv")).join(","), golden);
    assert_eq!(header(&dir.path().join("aggregate.csv")), AGGREGATE_HEADER);
    assert_eq!(PER_REPLICATION_PREFIX.len() + KPI_NAMES.len(), golden.split(',').count());
}

#[test]
fn aggregate_means_match_the_per_replication_rows() {
    let dir = tempfile::tempdir().unwrap();
    let result = experiment_staff_mix(&short("ww-like"), [2, 5], 10, 4).unwrap();
    write_results(&result, dir.path()).unwrap();

    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    let mut r = csv::Reader::from_path(dir.path().join("per_replication.csv")).unwrap();
    let names = r.headers().unwrap().clone();
    for row in r.records() {
        let row = row.unwrap();
        for (i, kpi) in names.iter().enumerate().skip(PER_REPLICATION_PREFIX.len()) {
            let e = sums.entry((row[1].to_string(), kpi.to_string())).or_default();
            e.0 += row[i].parse::<f64>().unwrap();
            e.1 += 1;
        }
    }
    let mut r = csv::Reader::from_path(dir.path().join("aggregate.csv")).unwrap();
    let mut checked = 0;
    for row in r.records() {
        let row = row.unwrap();
        let (sum, n) = sums[&(row[1].to_string(), row[3].to_string())];
        let mean: f64 = row[5].parse().unwrap();
        assert_eq!(row[4].parse::<usize>().unwrap(), n);
        assert!((mean - sum / n as f64).abs() <= 1e-9 * mean.abs().max(1.0), "{row:?}");
        checked += 1;
    }
    assert_eq!(checked, sums.len());
}

#[test]
fn manifest_reproduces_its_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let result = experiment_staff_mix(&short("atv-like"), [1, 4], 10, 3).unwrap();
    write_results(&result, a.path()).unwrap();

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let levels = manifest["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| LevelSpec {
            label: l["label"].as_str().unwrap().into(),
            value: l["factor_value"].as_f64().unwrap(),
            config: serde_json::from_value(l["config"].clone()).unwrap(),
        })
        .collect();
    let reps = manifest["replications"].as_u64().unwrap() as usize;
    let rerun = run_levels(
        manifest["experiment"].as_str().unwrap(),
        manifest["factor"].as_str().unwrap(),
        levels,
        reps,
    )
    .unwrap();
    write_results(&rerun, b.path()).unwrap();
    for file in ["per_replication.csv", "aggregate.csv", "manifest.json"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn scenario_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let c = ScenarioConfig::preset("ww-like").unwrap();
    let toml_path = dir.path().join("s.toml");
    let json_path = dir.path().join("s.json");
    std::fs::write(&toml_path, c.to_toml_string()).unwrap();
    std::fs::write(&json_path, c.to_json_string()).unwrap();
    assert_eq!(ScenarioConfig::load(&toml_path).unwrap(), c);
    assert_eq!(ScenarioConfig::load(&json_path).unwrap(), c);
}

#[test]
fn invalid_scenarios_report_every_problem() {
    let mut c = ScenarioConfig::preset("atv-like").unwrap();
    c.probabilities.conversion_rate = 1.5;
    c.durations.till = TriangularSpec { min: 3.0, mode: 2.0, max: 4.0 };
    c.population.size = 0;
    match c.validate() {
        Err(ConfigError::Invalid(issues)) => {
            let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
            for expected in ["probabilities.conversion_rate", "durations.till", "population.size"] {
                assert!(paths.contains(&expected), "{paths:?}");
            }
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = ScenarioConfig::preset("atv-like").unwrap().to_toml_string() + "\nsurprise = 1\n";
    assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(ConfigError::Parse { .. })));
}

#[test]
fn conversion_elasticity_is_one_without_congestion() {
    // transactions are proportional to the buy probability when nothing
    // queues and the pool never runs dry
    let mut c = short("ww-like");
    c.population.size = 50_000;
    c.population.mix = CustomerMix::only(CustomerType::ServiceSeeker);
    c.probabilities.ask_refund = 0.0;
    let d = &mut c.durations;
    for spec in [&mut d.browse, &mut d.help_l1, &mut d.help_l2, &mut d.till] {
        *spec = TriangularSpec::point(0.0);
    }
    let rows =
        sensitivity_sweep(&c, &["probabilities.conversion_rate", "durations.refund.mode"], 0.2, 10).unwrap();
    assert_eq!(rows[0].parameter, "probabilities.conversion_rate");
    assert!((rows[0].elasticity - 1.0).abs() < 0.05, "{rows:?}");
    assert_eq!(rows[1].elasticity, 0.0);

    let dir = tempfile::tempdir().unwrap();
    let path = write_sensitivity(&rows, dir.path()).unwrap();
    assert_eq!(header(&path)[..3], ["rank", "parameter", "base_value"]);
}

fn storesim() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_storesim"));
    cmd.env_remove(OUT_DIR_ENV);
    cmd
}

#[test]
fn cli_runs_a_scenario_file_into_the_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one-week.toml");
    std::fs::write(&scenario, short("atv-like").to_toml_string()).unwrap();
    let out = dir.path().join("from-env");
    let status = storesim()
        .args(["run", "--reps", "2", "--seed", "7", "--scenario"])
        .arg(&scenario)
        .env(OUT_DIR_ENV, &out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 7"));
}

#[test]
fn cli_exits_nonzero_on_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let mut c = short("atv-like");
    c.refunds.empowerment = 2.0;
    std::fs::write(&bad, c.to_toml_string()).unwrap();
    for args in [
        vec!["validate", "--scenario", bad.to_str().unwrap()],
        vec!["run", "--scenario", "no-such-preset"],
        vec!["exp1", "--scenario", "atv-like", "--max-cashiers", "12", "--reps", "1"],
    ] {
        let out = storesim().args(&args).arg("--help").output().unwrap();
        assert!(out.status.success(), "{args:?} --help");
        let out = storesim().args(&args).current_dir(dir.path()).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn cli_writes_a_gnuplot_table() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(&scenario, short("ww-like").to_json_string()).unwrap();
    let status = storesim()
        .args(["exp2", "--reps", "2", "--levels", "0,1", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let status = storesim()
        .arg("plot")
        .arg(dir.path().join("aggregate.csv"))
        .args(["--kpi", "manager_refund_fraction", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let table = std::fs::read_to_string(dir.path().join("manager_refund_fraction.dat")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("\"empowerment=0\" 0 1 1 1"));
    assert!(dir.path().join("manager_refund_fraction.gp").exists());
}
