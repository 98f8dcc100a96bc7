#![allow(dead_code)]

use chaos_bermudan::rng::draw_increment;
use chaos_bermudan::{BasisCatalog, PathBatch};
use statrs::distribution::{ContinuousCDF, Normal};

/// `paths x steps x dims` standard normals from the library stream.
pub fn gaussians(seed: u64, paths: usize, steps: usize, dims: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(paths * steps * dims);
    for m in 0..paths {
        for i in 0..steps {
            for j in 0..dims {
                g.push(draw_increment(seed, 0, m as u64, i as u32, j as u32));
            }
        }
    }
    g
}

/// Batch with the given increments, one exercise date per step and the
/// payoffs supplied row-major (`steps + 1` per path).
pub fn batch(
    paths: usize,
    steps: usize,
    dims: usize,
    increments: Vec<f64>,
    payoffs: Vec<f64>,
) -> PathBatch {
    PathBatch::new(
        paths,
        steps,
        dims,
        increments,
        payoffs,
        (0..=steps).collect(),
    )
    .unwrap()
}

pub fn zero_payoffs(paths: usize, steps: usize) -> Vec<f64> {
    vec![0.0; paths * (steps + 1)]
}

/// Index of the multi-index given as `(increment, dim, degree)` triples.
pub fn slot(catalog: &BasisCatalog, entries: &[(usize, usize, u32)]) -> usize {
    let mut dense = vec![0u32; catalog.increments() * catalog.dims()];
    for &(i, j, e) in entries {
        dense[(i - 1) * catalog.dims() + (j - 1)] = e;
    }
    catalog.position(&dense).unwrap()
}

pub fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Black-Scholes European put.
pub fn bs_put(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    if tau <= 0.0 || vol <= 0.0 {
        return (strike * (-rate * tau).exp() - spot).max(0.0);
    }
    let sd = vol * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * tau) / sd;
    let d2 = d1 - sd;
    strike * (-rate * tau).exp() * norm_cdf(-d2) - spot * norm_cdf(-d1)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `E[f(Z)]` for a standard normal `Z`, by composite Gauss-Legendre on
/// `[-10, 10]`.
pub fn normal_expectation(f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(32);
    let panels = 80;
    let (a, b) = (-10.0, 10.0);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let z = mid + 0.5 * h * xi;
            let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            total += 0.5 * h * wi * f(z) * density;
        }
    }
    total
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
