//! Command-line front end over the library's experiment runners.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use storesim::harness::{
    experiment_customer_mix, experiment_empowerment, experiment_staff_mix, gnuplot_table, run_levels,
    run_replication_with, sensitivity_sweep, write_results, write_sensitivity, ExperimentResult, LevelSpec,
    ScenarioConfig, OUT_DIR_ENV, PRESETS,
};
use storesim::population::{CustomerMix, CustomerType};
use storesim::RunOptions;

const DEFAULT_PARAMETERS: [&str; 12] = [
    "probabilities.conversion_rate",
    "probabilities.ask_help",
    "probabilities.ask_refund",
    "probabilities.regoal",
    "probabilities.level2_help",
    "durations.browse.mode",
    "durations.help_l1.mode",
    "durations.till.mode",
    "durations.patience.mode",
    "refunds.threshold",
    "refunds.empowerment",
    "footfall_scale",
];

#[derive(Parser)]
#[command(name = "storesim", version, about = "Retail department simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (.toml or .json) or preset name
    #[arg(long, default_value = "ww-like")]
    scenario: String,
    /// Master seed; overrides the scenario's
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Replications of one scenario
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write the event log of replication 0
        #[arg(long)]
        log: bool,
    },
    /// Cashier sweep at constant total staff
    Exp1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        min_cashiers: u32,
        #[arg(long, default_value_t = 7)]
        max_cashiers: u32,
        #[arg(long, default_value_t = 10)]
        total: u32,
    },
    /// Cashier empowerment sweep
    Exp2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        levels: Vec<f64>,
    },
    /// Scenario mix against each single-type population and the even mix
    Exp3 {
        #[command(flatten)]
        common: Common,
    },
    /// One-at-a-time sensitivity of transactions
    Sens {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Check a scenario and list every problem
    Validate {
        #[arg(long, default_value = "ww-like")]
        scenario: String,
    },
    /// gnuplot data and script for one KPI of an aggregate.csv
    Plot {
        aggregate: PathBuf,
        #[arg(long, default_value = "transactions")]
        kpi: String,
        #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
        out: PathBuf,
    },
}

fn load(scenario: &str) -> Result<ScenarioConfig, Box<dyn std::error::Error>> {
    let config = if PRESETS.contains(&scenario) {
        ScenarioConfig::preset(scenario)?
    } else {
        ScenarioConfig::load(scenario)?
    };
    config.validate()?;
    Ok(config)
}

fn prepare(common: &Common) -> Result<ScenarioConfig, Box<dyn std::error::Error>> {
    let mut config = load(&common.scenario)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn report(result: &ExperimentResult, dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    for path in write_results(result, dir)? {
        println!("wrote {}", path.display());
    }
    for level in &result.levels {
        let t = level.summary("transactions");
        let s = level.summary("satisfied");
        println!(
            "{:<28} transactions {:>10.1} ± {:<8.1} satisfied {:>8.1} ± {:.1}",
            level.label, t.mean, t.ci95_half_width, s.mean, s.ci95_half_width
        );
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { common, log } => {
            let config = prepare(&common)?;
            let level = LevelSpec { label: config.name.clone(), value: 0.0, config: config.clone() };
            let result = run_levels("run", "scenario", vec![level], common.reps)?;
            report(&result, &common.out)?;
            if log {
                let options = RunOptions { record_log: true, ..RunOptions::default() };
                let out = run_replication_with(&config, 0, options)?;
                let path = common.out.join("events.log");
                std::fs::write(&path, out.log_text())?;
                println!("wrote {}", path.display());
            }
        }
        Command::Exp1 { common, min_cashiers, max_cashiers, total } => {
            let config = prepare(&common)?;
            let result = experiment_staff_mix(&config, min_cashiers..=max_cashiers, total, common.reps)?;
            report(&result, &common.out)?;
        }
        Command::Exp2 { common, levels } => {
            let config = prepare(&common)?;
            let result = experiment_empowerment(&config, &levels, common.reps)?;
            report(&result, &common.out)?;
        }
        Command::Exp3 { common } => {
            let config = prepare(&common)?;
            let mut mixes = vec![("even".to_string(), CustomerMix::even())];
            mixes.extend(CustomerType::ALL.map(|t| (t.name().to_string(), CustomerMix::only(t))));
            let result = experiment_customer_mix(&config, &config.population.mix, &mixes, common.reps)?;
            report(&result, &common.out)?;
        }
        Command::Sens { common, params, delta } => {
            let config = prepare(&common)?;
            let params: Vec<&str> = if params.is_empty() {
                DEFAULT_PARAMETERS.to_vec()
            } else {
                params.iter().map(String::as_str).collect()
            };
            let rows = sensitivity_sweep(&config, &params, delta, common.reps)?;
            let path = write_sensitivity(&rows, &common.out)?;
            println!("wrote {}", path.display());
            for r in &rows {
                println!("{:>3} {:<32} elasticity {:>8.4}", r.rank, r.parameter, r.elasticity);
            }
        }
        Command::Validate { scenario } => {
            let config = load(&scenario)?;
            println!("{}: ok", config.name);
        }
        Command::Plot { aggregate, kpi, out } => {
            let table = gnuplot_table(&aggregate, &kpi)?;
            std::fs::create_dir_all(&out)?;
            let data = out.join(format!("{kpi}.dat"));
            let script = out.join(format!("{kpi}.gp"));
            std::fs::write(&data, table)?;
            std::fs::write(
                &script,
                format!(
                    "set terminal pngcairo size 800,500\n\
                     set output '{kpi}.png'\n\
                     set xlabel 'factor'\nset ylabel '{kpi}'\nset key off\n\
                     plot '{kpi}.dat' using 2:3:4:5 with yerrorlines\n"
                ),
            )?;
            println!("wrote {} and {}", data.display(), script.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
