//! Fixtures shared by the benchmarks.

use chaos_bermudan::pricer::simulate_batch;
use chaos_bermudan::{
    BlackScholes, Model, PathBatch, PayoffSpec, PricingRequest, TimeGrid, WorkerPool,
};

/// Delayed moving-average call on 50 dates, the instance used for scaling runs.
pub fn moving_average_request(order: usize, paths: usize) -> PricingRequest {
    let bs = BlackScholes::new(vec![100.0], 0.05, vec![0.3], 0.0).expect("valid model");
    let grid = TimeGrid::uniform(0.2, 50, 50).expect("valid grid");
    let payoff = PayoffSpec::moving_average(0.02, 0.08, 0.2, 50).expect("valid payoff");
    let mut req = PricingRequest::new(Model::BlackScholes(bs), payoff, grid, order, paths);
    req.seed = 1;
    req
}

/// Simulated batch for `request`, run 0.
pub fn batch(request: &PricingRequest) -> PathBatch {
    simulate_batch(request, 0, &WorkerPool::sequential())
        .expect("simulation succeeds")
        .0
}

/// `exp` of a scaled sum of increments, a smooth regression target.
pub fn smooth_targets(batch: &PathBatch) -> Vec<f64> {
    (0..batch.paths())
        .map(|m| (0.1 * batch.increment_row(m).iter().sum::<f64>()).exp())
        .collect()
}
