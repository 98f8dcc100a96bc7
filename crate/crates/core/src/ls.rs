//! Least-squares Monte Carlo baseline: continuation values regressed on
//! polynomials of the current state over in-the-money paths.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{AssetPaths, TimeGrid};
use crate::payoffs::PayoffSpec;
use crate::pool::WorkerPool;
use crate::pricer::{simulate_batch, PricingRequest, PricingResult, RunOutcome};
use crate::regression::PathBatch;
use crate::stats::mean_and_variance;

/// State variables used as regressors at exercise date `k`.
///
/// Single-asset puts use the spot (and the variance under Heston), baskets
/// use every spot, and the moving-average call uses the spot and the lagged
/// spots entering its average.
pub fn state_factors(
    spec: &PayoffSpec,
    paths: &AssetPaths,
    grid: &TimeGrid,
    m: usize,
    k: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    let i = grid.date_map()[k];
    match spec {
        PayoffSpec::Put { .. } => {
            out.push(paths.spot(m, i, 0));
            if let Some(v) = paths.variance_at(m, i) {
                out.push(v);
            }
        }
        PayoffSpec::BasketPut { .. } => {
            out.extend((0..paths.assets).map(|j| paths.spot(m, i, j)));
        }
        PayoffSpec::MovingAverageCall { window, delay } => {
            out.push(paths.spot(m, i, 0));
            let hi = k - delay;
            for j in hi + 1 - window..=hi {
                if j != k {
                    out.push(paths.spot(m, grid.date_map()[j], 0));
                }
            }
        }
    }
}

/// Exponent vectors of all monomials in `vars` variables with total degree
/// at most `degree`, constant first.
pub fn monomial_exponents(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(vars: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == vars {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(vars, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree as u32, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| e.iter().sum::<u32>());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsOutcome {
    pub tau: Vec<u32>,
    pub cashflow: Vec<f64>,
    pub continuation: f64,
}

/// Regression-based backward induction on simulated paths.
pub fn longstaff_schwartz(
    spec: &PayoffSpec,
    paths: &AssetPaths,
    grid: &TimeGrid,
    batch: &PathBatch,
    degree: usize,
) -> Result<LsOutcome> {
    let m_paths = batch.paths();
    let last = batch.last_date();
    let with_payoff = !matches!(spec, PayoffSpec::Put { .. });
    let mut tau = vec![last as u32; m_paths];
    let mut cashflow: Vec<f64> = (0..m_paths).map(|m| batch.payoff(m, last)).collect();
    let mut factors = Vec::new();
    state_factors(spec, paths, grid, 0, last, &mut factors);
    let vars = factors.len() + usize::from(with_payoff);
    let exps = monomial_exponents(vars, degree);
    let p = exps.len();

    for k in (1..last).rev() {
        if !batch.is_exercisable(k) {
            continue;
        }
        let itm: Vec<usize> = (0..m_paths).filter(|&m| batch.payoff(m, k) > 0.0).collect();
        if itm.is_empty() {
            continue;
        }
        let mut raw = Vec::with_capacity(itm.len() * vars);
        for &m in &itm {
            state_factors(spec, paths, grid, m, k, &mut factors);
            raw.extend_from_slice(&factors);
            if with_payoff {
                raw.push(batch.payoff(m, k));
            }
        }
        let n = itm.len() as f64;
        let mut shift = vec![0.0; vars];
        let mut scale = vec![0.0; vars];
        for row in raw.chunks(vars) {
            for (s, x) in shift.iter_mut().zip(row) {
                *s += x;
            }
        }
        shift.iter_mut().for_each(|s| *s /= n);
        for row in raw.chunks(vars) {
            for j in 0..vars {
                scale[j] += (row[j] - shift[j]).powi(2);
            }
        }
        for s in scale.iter_mut() {
            *s = (*s / n).sqrt();
            if s.is_nan() || *s <= 0.0 {
                *s = 1.0;
            }
        }

        let design = |row: &[f64], phi: &mut [f64]| {
            for (f, e) in phi.iter_mut().zip(&exps) {
                *f = e
                    .iter()
                    .enumerate()
                    .map(|(j, &d)| ((row[j] - shift[j]) / scale[j]).powi(d as i32))
                    .product();
            }
        };
        let mut ata = DMatrix::<f64>::zeros(p, p);
        let mut atb = DVector::<f64>::zeros(p);
        let mut phi = vec![0.0; p];
        for (row, &m) in raw.chunks(vars).zip(&itm) {
            design(row, &mut phi);
            let y = cashflow[m];
            for a in 0..p {
                atb[a] += phi[a] * y;
                for b in 0..=a {
                    ata[(a, b)] += phi[a] * phi[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                ata[(b, a)] = ata[(a, b)];
            }
        }
        let beta = solve_normal(ata, &atb).ok_or(Error::SingularRegression { date: k })?;
        for (row, &m) in raw.chunks(vars).zip(&itm) {
            design(row, &mut phi);
            let c: f64 = phi.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            let z = batch.payoff(m, k);
            if z >= c {
                tau[m] = k as u32;
                cashflow[m] = z;
            }
        }
    }
    let continuation = cashflow.iter().sum::<f64>() / m_paths as f64;
    Ok(LsOutcome {
        tau,
        cashflow,
        continuation,
    })
}

fn solve_normal(ata: DMatrix<f64>, atb: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = ata.clone().cholesky() {
        return Some(ch.solve(atb));
    }
    let p = ata.nrows();
    let jitter = 1e-10 * ata.trace().abs().max(1.0) / p as f64;
    let mut reg = ata;
    for a in 0..p {
        reg[(a, a)] += jitter;
    }
    reg.cholesky().map(|ch| ch.solve(atb))
}

/// Independent least-squares runs on the same streams as the chaos pricer.
pub fn price_longstaff_schwartz(request: &PricingRequest, degree: usize) -> Result<PricingResult> {
    request.validate()?;
    let start = Instant::now();
    let pool = WorkerPool::new(request.workers)?;
    let mut z0 = 0.0;
    let mut runs = Vec::with_capacity(request.runs);
    for i in 0..request.runs as u64 {
        let run = request.first_run + i;
        let t = Instant::now();
        let (batch, assets) = simulate_batch(request, run, &pool)?;
        let simulation_seconds = t.elapsed().as_secs_f64();
        z0 = batch.payoff(0, 0);
        let t = Instant::now();
        let out = longstaff_schwartz(&request.payoff, &assets, &request.grid, &batch, degree)?;
        runs.push(RunOutcome {
            run,
            price: z0.max(out.continuation),
            continuation: out.continuation,
            simulation_seconds,
            induction_seconds: t.elapsed().as_secs_f64(),
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
