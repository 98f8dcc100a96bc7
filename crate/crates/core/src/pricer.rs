//! Policy iteration pricer for Bermudan options.

use std::time::Instant;

use crate::basis::BasisCatalog;
use crate::error::{Error, Result};
use crate::models::{AssetPaths, Model, TimeGrid};
use crate::parallel::{run_parallel_induction, Induction, InductionConfig};
use crate::payoffs::{compute_payoff_matrix, PayoffSpec};
use crate::pool::WorkerPool;
use crate::reduce::Granularity;
use crate::regression::PathBatch;
use crate::stats::mean_and_variance;

/// How the continuation estimate enters the exercise decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExerciseRule {
    /// Exercise iff `Z_k >= C_k`; coefficients use every path.
    #[default]
    Standard,
    /// Exercise iff `Z_k > 0` and `Z_k >= C_k`; coefficients use only
    /// in-the-money paths (divisor still `M`).
    InTheMoney,
    /// Exercise iff `Z_k > 0` or `Z_k >= C_k`, with the in-the-money
    /// coefficient mask.
    InTheMoneyUnion,
}

impl ExerciseRule {
    pub fn masks_coefficients(self) -> bool {
        !matches!(self, ExerciseRule::Standard)
    }
}

/// Exercise date index and discounted cashflow of every path.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingState {
    pub tau: Vec<u32>,
    pub cashflow: Vec<f64>,
}

/// Single-worker backward induction.
pub fn backward_induction(
    catalog: &BasisCatalog,
    batch: &PathBatch,
    rule: ExerciseRule,
) -> Result<Induction> {
    let config = InductionConfig {
        rule,
        ..Default::default()
    };
    run_parallel_induction(catalog, batch, &config, &WorkerPool::sequential())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingRequest {
    pub model: Model,
    pub payoff: PayoffSpec,
    pub grid: TimeGrid,
    pub order: usize,
    pub paths: usize,
    pub runs: usize,
    pub seed: u64,
    /// Index of the first run; run `i` draws from stream `first_run + i`.
    pub first_run: u64,
    pub rule: ExerciseRule,
    pub workers: usize,
    pub granularity: Granularity,
}

impl PricingRequest {
    pub fn new(
        model: Model,
        payoff: PayoffSpec,
        grid: TimeGrid,
        order: usize,
        paths: usize,
    ) -> Self {
        PricingRequest {
            model,
            payoff,
            grid,
            order,
            paths,
            runs: 1,
            seed: 0,
            first_run: 0,
            rule: ExerciseRule::Standard,
            workers: 1,
            granularity: Granularity::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(crate::error::invalid("paths", "need at least one path"));
        }
        if self.runs == 0 {
            return Err(crate::error::invalid("runs", "need at least one run"));
        }
        self.payoff.validate(self.model.assets())?;
        self.granularity.validate()?;
        if self.workers == 0 || self.workers > self.paths {
            return Err(Error::InvalidWorkerCount {
                workers: self.workers,
                paths: self.paths,
            });
        }
        Ok(())
    }

    pub fn catalog(&self) -> Result<BasisCatalog> {
        BasisCatalog::enumerate(self.order, self.grid.steps(), self.model.brownian_dims())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: u64,
    pub price: f64,
    pub continuation: f64,
    pub simulation_seconds: f64,
    pub induction_seconds: f64,
}

impl RunOutcome {
    pub fn wall_seconds(&self) -> f64 {
        self.simulation_seconds + self.induction_seconds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub z0: f64,
    pub runs: Vec<RunOutcome>,
    pub mean_price: f64,
    /// Unbiased variance of the per-run prices; `None` for a single run.
    pub run_variance: Option<f64>,
    pub wall_seconds: f64,
}

impl PricingResult {
    /// `sqrt(run_variance / runs)`
    pub fn standard_error(&self) -> Option<f64> {
        self.run_variance
            .map(|v| (v / self.runs.len() as f64).sqrt())
    }
}

/// Simulates run `run` and returns the regression batch together with the
/// asset paths it came from.
pub fn simulate_batch(
    request: &PricingRequest,
    run: u64,
    pool: &WorkerPool,
) -> Result<(PathBatch, AssetPaths)> {
    let sim = request
        .model
        .simulate(&request.grid, request.paths, request.seed, run, pool)?;
    let z = compute_payoff_matrix(&request.payoff, &sim.assets, &request.grid)?;
    let batch = PathBatch::new(
        request.paths,
        request.grid.steps(),
        sim.dims,
        sim.increments,
        z.values,
        request.grid.date_map().to_vec(),
    )?
    .with_exercisable(z.exercisable)?;
    Ok((batch, sim.assets))
}

pub fn price_bermudan(request: &PricingRequest) -> Result<PricingResult> {
    request.validate()?;
    let start = Instant::now();
    let catalog = request.catalog()?;
    let pool = WorkerPool::new(request.workers)?;
    let config = InductionConfig {
        rule: request.rule,
        granularity: request.granularity,
        record_partials: false,
    };
    let mut z0 = 0.0;
    let mut runs = Vec::with_capacity(request.runs);
    for i in 0..request.runs as u64 {
        let run = request.first_run + i;
        let t = Instant::now();
        let (batch, _) = simulate_batch(request, run, &pool)?;
        let simulation_seconds = t.elapsed().as_secs_f64();
        z0 = batch.payoff(0, 0);
        let t = Instant::now();
        let induction = run_parallel_induction(&catalog, &batch, &config, &pool)?;
        let induction_seconds = t.elapsed().as_secs_f64();
        let price = z0.max(induction.continuation);
        log::info!("run {run}: price {price:.6} ({simulation_seconds:.2}s simulation, {induction_seconds:.2}s induction)");
        runs.push(RunOutcome {
            run,
            price,
            continuation: induction.continuation,
            simulation_seconds,
            induction_seconds,
        });
    }
    let prices: Vec<f64> = runs.iter().map(|r| r.price).collect();
    let (mean_price, run_variance) = mean_and_variance(&prices);
    Ok(PricingResult {
        z0,
        runs,
        mean_price,
        run_variance,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
