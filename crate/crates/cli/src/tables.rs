//! The published experiment tables as runnable row lists with their reference
//! values attached.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chaos_bermudan::{measure_scalability, ScalabilityRow};

use crate::config::{
    AlgorithmConfig, ExecutionConfig, ExperimentConfig, GranularityConfig, GridConfig, Method,
    ModelConfig, OutputConfig, PayoffConfig,
};
use crate::{fmt_f64, fmt_opt, run_experiment, write_results_csv, write_scalability_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Paths capped at `DESK_MAX_PATHS` and runs at `DESK_MAX_RUNS`.
    Desk,
    /// Path counts as published.
    Published,
}

pub const DESK_MAX_PATHS: usize = 1_000_000;
pub const DESK_MAX_RUNS: usize = 25;
pub const PUBLISHED_RUNS: usize = 25;

impl std::str::FromStr for Scale {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "published" => Ok(Scale::Published),
            other => bail!("unknown scale {other:?} (expected desk or published)"),
        }
    }
}

/// One table row: the experiment at its published size plus reference values.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub name: String,
    pub config: ExperimentConfig,
    pub expected_price: Option<f64>,
    pub expected_variance: Option<f64>,
    /// Benchmark quoted alongside the row, verbatim.
    pub reference: Option<String>,
}

impl TableRow {
    /// The row's config at the given scale.
    pub fn scaled(&self, scale: Scale) -> ExperimentConfig {
        let mut cfg = self.config.clone();
        if scale == Scale::Desk {
            cfg.algorithm.paths = cfg.algorithm.paths.min(DESK_MAX_PATHS);
            cfg.algorithm.runs = cfg.algorithm.runs.min(DESK_MAX_RUNS);
        }
        cfg
    }
}

fn algorithm(order: usize, paths: usize, itm_rule: bool) -> AlgorithmConfig {
    AlgorithmConfig {
        method: Method::Chaos,
        order,
        ls_degree: 3,
        paths,
        runs: PUBLISHED_RUNS,
        seed: 1,
        first_run: 0,
        itm_rule,
        union_rule: false,
        granularity: GranularityConfig::Fixed,
        leaves: chaos_bermudan::reduce::DEFAULT_LEAVES,
    }
}

fn least_squares(paths: usize, degree: usize) -> AlgorithmConfig {
    AlgorithmConfig {
        method: Method::LeastSquares,
        ls_degree: degree,
        ..algorithm(degree, paths, true)
    }
}

fn experiment(
    model: ModelConfig,
    payoff: PayoffConfig,
    grid: GridConfig,
    algorithm: AlgorithmConfig,
) -> ExperimentConfig {
    ExperimentConfig {
        model,
        payoff,
        grid,
        algorithm,
        execution: ExecutionConfig::default(),
        output: OutputConfig::default(),
    }
}

fn paths_label(m: usize) -> String {
    let exp = (m as f64).log10().floor() as u32;
    let lead = m / 10usize.pow(exp);
    if lead * 10usize.pow(exp) == m {
        if lead == 1 {
            format!("1e{exp}")
        } else {
            format!("{lead}e{exp}")
        }
    } else {
        m.to_string()
    }
}

/// Heston put with `S_0 = K = 100`, `T = 1` and 20 exercise dates.
pub fn heston_put(algorithm: AlgorithmConfig) -> ExperimentConfig {
    experiment(
        ModelConfig::Heston {
            spot: 100.0,
            rate: 0.1,
            v0: 0.01,
            kappa: 2.0,
            theta: 0.01,
            xi: 0.2,
            rho: -0.3,
        },
        PayoffConfig::Put { strike: 100.0 },
        GridConfig {
            maturity: 1.0,
            dates: 20,
            steps: None,
        },
        algorithm,
    )
}

/// Equal-weight put on five correlated Black-Scholes assets, `T = 3`.
pub fn basket_put(strike: f64, algorithm: AlgorithmConfig) -> ExperimentConfig {
    experiment(
        ModelConfig::BlackScholes {
            spot: 100.0,
            assets: 5,
            rate: 0.05,
            vol: 0.2,
            rho: 0.2,
        },
        PayoffConfig::BasketPut {
            strike,
            weights: None,
        },
        GridConfig {
            maturity: 3.0,
            dates: 20,
            steps: None,
        },
        algorithm,
    )
}

/// Moving-average call on one asset, `T = 0.2` with 50 exercise dates.
pub fn moving_average(window: f64, delay: f64, algorithm: AlgorithmConfig) -> ExperimentConfig {
    experiment(
        ModelConfig::BlackScholes {
            spot: 100.0,
            assets: 1,
            rate: 0.05,
            vol: 0.3,
            rho: 0.0,
        },
        PayoffConfig::MovingAverage { window, delay },
        GridConfig {
            maturity: 0.2,
            dates: 50,
            steps: None,
        },
        algorithm,
    )
}

/// Rows of tables 1 to 4.
pub fn table_rows(id: u8) -> Result<Vec<TableRow>> {
    let row = |name: String, config, price: f64, variance: f64, reference: Option<&str>| TableRow {
        name,
        config,
        expected_price: Some(price),
        expected_variance: Some(variance),
        reference: reference.map(str::to_string),
    };
    Ok(match id {
        1 => {
            let published = [
                (2, 100_000, 1.67631, 4.07299e-05),
                (2, 1_000_000, 1.67559, 8.22897e-06),
                (2, 10_000_000, 1.67513, 3.62552e-07),
                (3, 100_000, 1.70884, 6.51323e-05),
                (3, 1_000_000, 1.6976, 8.60362e-06),
                (3, 10_000_000, 1.69588, 7.54025e-07),
            ];
            let mut rows: Vec<TableRow> = published
                .iter()
                .map(|&(p, m, price, var)| {
                    row(
                        format!("t1_p{p}_m{}", paths_label(m)),
                        heston_put(algorithm(p, m, true)),
                        price,
                        var,
                        None,
                    )
                })
                .collect();
            rows.push(TableRow {
                name: "t1_ls_d3_m1e6".into(),
                config: heston_put(least_squares(1_000_000, 3)),
                expected_price: Some(1.74),
                expected_variance: None,
                reference: None,
            });
            rows
        }
        2 => {
            let published = [
                (100.0, 2, 50_000, 4.01793, 0.00039217),
                (100.0, 2, 100_000, 4.00769, 0.000285113),
                (100.0, 2, 1_000_000, 3.99801, 2.14924e-05),
                (100.0, 3, 50_000, 4.2544, 0.000411596),
                (100.0, 3, 100_000, 4.1965, 0.000242559),
                (100.0, 3, 1_000_000, 4.06587, 2.18969e-05),
                (90.0, 2, 50_000, 1.29423, 0.000130733),
                (90.0, 2, 100_000, 1.27274, 0.000112594),
                (90.0, 2, 1_000_000, 1.25166, 2.24252e-05),
                (90.0, 3, 50_000, 1.52426, 8.83669e-05),
                (90.0, 3, 100_000, 1.49847, 0.000104792),
                (90.0, 3, 1_000_000, 1.31845, 2.72347e-05),
            ];
            let mut rows: Vec<TableRow> = published
                .iter()
                .map(|&(k, p, m, price, var)| {
                    row(
                        format!("t2_k{k}_p{p}_m{}", paths_label(m)),
                        basket_put(k, algorithm(p, m, true)),
                        price,
                        var,
                        None,
                    )
                })
                .collect();
            for (k, price) in [(100.0, 4.07), (90.0, 1.32)] {
                rows.push(TableRow {
                    name: format!("t2_k{k}_ls_d3_m1e6"),
                    config: basket_put(k, least_squares(1_000_000, 3)),
                    expected_price: Some(price),
                    expected_variance: None,
                    reference: None,
                });
            }
            rows
        }
        3 => {
            let published = [
                (0.02, 2, 100_000, 3.53118, 8.96861e-06, Some("3.531")),
                (0.02, 2, 1_000_000, 3.53863, 9.73349e-07, None),
                (0.02, 3, 100_000, 3.45177, 7.04968e-06, None),
                (0.02, 3, 1_000_000, 3.52758, 7.12395e-07, None),
                (0.04, 2, 100_000, 4.30318, 0.000173201, Some("> 4.268")),
                (0.04, 2, 1_000_000, 4.31781, 8.8221e-07, None),
                (0.04, 3, 100_000, 4.18467, 0.000130958, None),
                (0.04, 3, 1_000_000, 4.30239, 1.10557e-06, None),
            ];
            published
                .iter()
                .map(|&(w, p, m, price, var, reference)| {
                    row(
                        format!("t3_w{w}_p{p}_m{}", paths_label(m)),
                        moving_average(w, 0.0, algorithm(p, m, false)),
                        price,
                        var,
                        reference,
                    )
                })
                .collect()
        }
        4 => {
            let published = [
                (2, 50_000, 6.62011, 0.000751472),
                (2, 100_000, 6.67733, 0.000256044),
                (2, 1_000_000, 6.74565, 2.00404e-05),
                (3, 50_000, 6.28484, 0.000425202),
                (3, 100_000, 6.36383, 0.000314247),
                (3, 1_000_000, 6.65446, 8.01606e-06),
            ];
            published
                .iter()
                .map(|&(p, m, price, var)| {
                    row(
                        format!("t4_p{p}_m{}", paths_label(m)),
                        table4_instance(p, m),
                        price,
                        var,
                        None,
                    )
                })
                .collect()
        }
        other => bail!("table {other} has no pricing rows (valid ids are 1 to 5)"),
    })
}

/// Delayed moving average: window 0.02 (5 dates), delay 0.08 (20 dates).
pub fn table4_instance(order: usize, paths: usize) -> ExperimentConfig {
    moving_average(0.02, 0.08, algorithm(order, paths, true))
}

/// Published efficiencies of the scalability table, by process count.
pub const PUBLISHED_EFFICIENCY: [(usize, f64); 9] = [
    (1, 1.0),
    (2, 0.99),
    (4, 0.97),
    (16, 0.84),
    (32, 0.86),
    (64, 0.84),
    (128, 0.79),
    (256, 0.76),
    (512, 0.68),
];

/// Worker counts swept for the scalability table.
pub const DESK_WORKERS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Replaces every row's run count.
    pub runs: Option<usize>,
    pub workers: Option<usize>,
}

/// Runs every row of table `id` and writes one CSV per row plus
/// `comparison.csv` into `out`.
pub fn run_table_suite(id: u8, scale: Scale, out: &Path, options: &SuiteOptions) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    if id == 5 {
        return run_scalability_table(scale, out, options);
    }
    let rows = table_rows(id)?;
    let mut cmp = csv::Writer::from_path(out.join("comparison.csv"))?;
    cmp.write_record([
        "row",
        "method",
        "order",
        "published_paths",
        "paths",
        "runs",
        "price",
        "run_variance",
        "expected_price",
        "expected_variance",
        "price_minus_expected",
        "reference",
    ])?;
    for row in &rows {
        let mut cfg = row.scaled(scale);
        if let Some(runs) = options.runs {
            cfg.algorithm.runs = runs;
        }
        if options.workers.is_some() {
            cfg.execution.workers = options.workers;
        }
        let cfg = cfg.resolved()?;
        log::info!("table {id}: {}", row.name);
        let result = run_experiment(&cfg)?;
        write_results_csv(
            &result,
            File::create(out.join(format!("{}.csv", row.name)))?,
        )?;
        std::fs::write(out.join(format!("{}.toml", row.name)), cfg.to_toml())?;
        let method = match cfg.algorithm.method {
            Method::Chaos => "chaos",
            Method::LeastSquares => "least-squares",
        };
        let order = match cfg.algorithm.method {
            Method::Chaos => cfg.algorithm.order,
            Method::LeastSquares => cfg.algorithm.ls_degree,
        };
        cmp.write_record([
            row.name.clone(),
            method.to_string(),
            order.to_string(),
            row.config.algorithm.paths.to_string(),
            cfg.algorithm.paths.to_string(),
            cfg.algorithm.runs.to_string(),
            fmt_f64(result.mean_price),
            fmt_opt(result.run_variance),
            fmt_opt(row.expected_price),
            fmt_opt(row.expected_variance),
            fmt_opt(row.expected_price.map(|e| result.mean_price - e)),
            row.reference.clone().unwrap_or_default(),
        ])?;
        cmp.flush()?;
    }
    Ok(())
}

fn run_scalability_table(scale: Scale, out: &Path, _options: &SuiteOptions) -> Result<()> {
    let mut cfg = table4_instance(3, 1_000_000);
    cfg.algorithm.runs = 1;
    if scale == Scale::Desk {
        cfg.algorithm.paths = cfg.algorithm.paths.min(DESK_MAX_PATHS);
    }
    let request = cfg.to_request()?;
    let rows = measure_scalability(&request, &DESK_WORKERS)?;
    write_scalability_csv(&rows, File::create(out.join("scalability.csv"))?)?;
    std::fs::write(out.join("scalability.toml"), cfg.to_toml())?;
    write_scalability_comparison(&rows, File::create(out.join("comparison.csv"))?)
}

fn write_scalability_comparison<W: std::io::Write>(
    rows: &[ScalabilityRow],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "workers",
        "wall_seconds",
        "efficiency",
        "published_efficiency",
    ])?;
    for r in rows {
        let published = PUBLISHED_EFFICIENCY
            .iter()
            .find(|(procs, _)| *procs == r.workers)
            .map(|&(_, e)| e);
        w.write_record([
            r.workers.to_string(),
            fmt_f64(r.wall_seconds()),
            fmt_f64(r.efficiency),
            fmt_opt(published),
        ])?;
    }
    for &(procs, e) in PUBLISHED_EFFICIENCY
        .iter()
        .filter(|(p, _)| !rows.iter().any(|r| r.workers == *p))
    {
        w.write_record([procs.to_string(), String::new(), String::new(), fmt_f64(e)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_counts() {
        assert_eq!(table_rows(1).unwrap().len(), 7);
        assert_eq!(table_rows(2).unwrap().len(), 14);
        assert_eq!(table_rows(3).unwrap().len(), 8);
        assert_eq!(table_rows(4).unwrap().len(), 6);
        assert!(table_rows(5).is_err());
        assert!(table_rows(6).is_err());
    }

    #[test]
    fn every_row_is_a_valid_experiment() {
        for id in 1..=4 {
            for row in table_rows(id).unwrap() {
                let cfg = ExperimentConfig::from_toml(&row.config.to_toml(), &[]).unwrap();
                assert_eq!(cfg, row.config, "{}", row.name);
            }
        }
    }

    #[test]
    fn published_values_are_attached() {
        let t3 = table_rows(3).unwrap();
        let r = t3.iter().find(|r| r.name == "t3_w0.02_p2_m1e5").unwrap();
        assert_eq!(r.expected_price, Some(3.53118));
        assert_eq!(r.reference.as_deref(), Some("3.531"));
        let t2 = table_rows(2).unwrap();
        let r = t2.iter().find(|r| r.name == "t2_k90_p3_m1e6").unwrap();
        assert_eq!(r.expected_price, Some(1.31845));
    }

    #[test]
    fn desk_scale_caps_paths_and_runs() {
        let t1 = table_rows(1).unwrap();
        let big = t1.iter().find(|r| r.name == "t1_p3_m1e7").unwrap();
        assert_eq!(big.scaled(Scale::Desk).algorithm.paths, 1_000_000);
        assert_eq!(big.scaled(Scale::Published).algorithm.paths, 10_000_000);
        assert_eq!(big.scaled(Scale::Desk).algorithm.runs, 25);
    }

    #[test]
    fn labels() {
        assert_eq!(paths_label(50_000), "5e4");
        assert_eq!(paths_label(1_000_000), "1e6");
        assert_eq!(paths_label(123), "123");
    }
}
