use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chaos_bermudan::parallel::write_timings_csv;
use chaos_bermudan::pricer::simulate_batch;
use chaos_bermudan::{measure_scalability, run_parallel_induction, InductionConfig, WorkerPool};
use chaos_bermudan_cli::config::{ExperimentConfig, WORKERS_ENV};
use chaos_bermudan_cli::tables::{run_table_suite, table4_instance, Scale, SuiteOptions};
use chaos_bermudan_cli::{
    parse_worker_list, run_experiment, write_results_csv, write_scalability_csv,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chaos-bermudan",
    version,
    about = "Bermudan option pricing by Wiener chaos expansion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one configured experiment.
    ///
    /// The results CSV goes to `output.path`, or to stdout when no path is
    /// set. The resolved config is echoed to stdout in the first case and to
    /// stderr in the second.
    Price {
        #[arg(long)]
        config: PathBuf,
        /// Override a config value, e.g. `--set algorithm.paths=50000`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every row of a published table.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
        /// `desk` caps paths at 1e6 and runs at 25; `published` keeps published sizes.
        #[arg(long, default_value = "desk")]
        scale: Scale,
        #[arg(long)]
        out: PathBuf,
        /// Replace the run count of every row.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Scalability sweep over worker counts with per-phase timings.
    ///
    /// Defaults to the delayed moving-average instance with p = 3 and 1e6
    /// paths; `--config` and `--set` change the instance.
    Bench {
        #[arg(long, default_value = "1,2,4,8")]
        workers: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn price(config: PathBuf, overrides: Vec<String>) -> Result<()> {
    let cfg = ExperimentConfig::load(&config, &overrides)?.resolved()?;
    let echo = cfg.to_toml();
    let result = run_experiment(&cfg)?;
    match &cfg.output.path {
        Some(path) => {
            print!("{echo}");
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_results_csv(&result, file)?;
        }
        None => {
            eprint!("{echo}");
            write_results_csv(&result, std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn bench(
    workers: &str,
    config: Option<PathBuf>,
    overrides: Vec<String>,
    out: PathBuf,
) -> Result<()> {
    let counts = parse_worker_list(workers)?;
    let cfg = match config {
        Some(path) => ExperimentConfig::load(&path, &overrides)?,
        None => {
            let text = table4_instance(3, 1_000_000).to_toml();
            ExperimentConfig::from_toml(&text, &overrides)?
        }
    };
    let mut request = cfg.to_request()?;
    request.runs = 1;
    std::fs::create_dir_all(&out)?;
    let rows = measure_scalability(&request, &counts)?;
    write_scalability_csv(&rows, File::create(out.join("scalability.csv"))?)?;
    write_scalability_csv(&rows, std::io::stdout().lock())?;

    let widest = counts.iter().copied().max().unwrap_or(1);
    let pool = WorkerPool::new(widest)?;
    let (batch, _) = simulate_batch(&request, request.first_run, &pool)?;
    let induction = InductionConfig {
        rule: request.rule,
        granularity: request.granularity,
        record_partials: false,
    };
    let ind = run_parallel_induction(&request.catalog()?, &batch, &induction, &pool)?;
    let mut file = File::create(out.join("timings.csv"))?;
    write_timings_csv(&ind.records, &mut file)?;
    file.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Price { config, overrides } => price(config, overrides),
        Command::Tables {
            id,
            scale,
            out,
            runs,
            workers,
        } => run_table_suite(id, scale, &out, &SuiteOptions { runs, workers }),
        Command::Bench {
            workers,
            config,
            overrides,
            out,
        } => bench(&workers, config, overrides, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
