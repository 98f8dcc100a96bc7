//! Experiment runner for the chaos-expansion Bermudan pricer: TOML-configured
//! pricing runs, table suites and scalability sweeps, all written as CSV.

pub mod config;
pub mod tables;

use std::io::Write;

use anyhow::Result;
use chaos_bermudan::ls::price_longstaff_schwartz;
use chaos_bermudan::{price_bermudan, PricingResult, ScalabilityRow};

pub use config::{ExperimentConfig, Method};

/// Runs one configured experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<PricingResult> {
    let request = config.to_request()?;
    log::info!(
        "pricing: order {}, {} paths, {} runs, {} workers",
        request.order,
        request.paths,
        request.runs,
        request.workers
    );
    Ok(match config.algorithm.method {
        Method::Chaos => price_bermudan(&request)?,
        Method::LeastSquares => price_longstaff_schwartz(&request, config.algorithm.ls_degree)?,
    })
}

/// Full-precision float for CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `NA` for an undefined statistic.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "NA".to_string())
}

/// One row per run followed by `mean_price` and `run_variance` rows whose
/// value sits in the `price` column.
pub fn write_results_csv<W: Write>(result: &PricingResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["run", "price", "continuation", "wall_seconds"])?;
    for r in &result.runs {
        w.write_record([
            r.run.to_string(),
            fmt_f64(r.price),
            fmt_f64(r.continuation),
            fmt_f64(r.wall_seconds()),
        ])?;
    }
    w.write_record(["mean_price", &fmt_f64(result.mean_price), "", ""])?;
    w.write_record(["run_variance", &fmt_opt(result.run_variance), "", ""])?;
    w.flush()?;
    Ok(())
}

pub fn write_scalability_csv<W: Write>(rows: &[ScalabilityRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "workers",
        "simulation_seconds",
        "induction_seconds",
        "wall_seconds",
        "efficiency",
        "induction_efficiency",
        "price",
    ])?;
    for r in rows {
        w.write_record([
            r.workers.to_string(),
            fmt_f64(r.simulation_seconds),
            fmt_f64(r.induction_seconds),
            fmt_f64(r.wall_seconds()),
            fmt_f64(r.efficiency),
            fmt_f64(r.induction_efficiency),
            fmt_f64(r.price),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `1,2,4,8`.
pub fn parse_worker_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("{x:?} is not a worker count"))
        })
        .collect()
}
