//! Time grids and path simulation for the Black-Scholes and Heston models.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::pool::WorkerPool;
use crate::rng::StreamKey;

/// Simulation grid `0 = t_0 < ... < t_n = T` and the grid index `sigma_k` of
/// every exercise date `T_k`, with `sigma_0 = 0` and `sigma_N = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    date_map: Vec<usize>,
}

impl TimeGrid {
    /// `dates` equally spaced exercise dates on `steps` equal grid steps;
    /// `steps` must be a multiple of `dates`.
    pub fn uniform(maturity: f64, dates: usize, steps: usize) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        if dates == 0 || steps == 0 || !steps.is_multiple_of(dates) {
            return Err(Error::InvalidGrid(format!(
                "steps ({steps}) must be a positive multiple of dates ({dates})"
            )));
        }
        let times = (0..=steps)
            .map(|i| maturity * i as f64 / steps as f64)
            .collect();
        let ratio = steps / dates;
        let date_map = (0..=dates).map(|k| k * ratio).collect();
        Self::new(times, date_map)
    }

    pub fn new(times: Vec<f64>, date_map: Vec<usize>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::InvalidGrid(
                "grid must start at 0 and have a step".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidGrid(
                "grid times must be strictly increasing".into(),
            ));
        }
        let n = times.len() - 1;
        if date_map.len() < 2 || date_map[0] != 0 || *date_map.last().unwrap() != n {
            return Err(Error::InvalidGrid(format!(
                "exercise dates must map 0 to 0 and the last date to {n}"
            )));
        }
        if date_map.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "exercise dates must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid { times, date_map })
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Number `N` of exercise dates.
    pub fn dates(&self) -> usize {
        self.date_map.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn date_map(&self) -> &[usize] {
        &self.date_map
    }

    pub fn maturity(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn date_time(&self, k: usize) -> f64 {
        self.times[self.date_map[k]]
    }

    /// `t_i - t_{i-1}` for `i` in `1..=n`.
    pub fn dt(&self, i: usize) -> f64 {
        self.times[i] - self.times[i - 1]
    }
}

/// Multi-asset Black-Scholes with equicorrelated Brownian drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackScholes {
    spots: Vec<f64>,
    rate: f64,
    vols: Vec<f64>,
    rho: f64,
    root: Vec<f64>,
}

impl BlackScholes {
    pub fn new(spots: Vec<f64>, rate: f64, vols: Vec<f64>, rho: f64) -> Result<Self> {
        let assets = spots.len();
        if assets == 0 {
            return Err(invalid("spots", "need at least one asset"));
        }
        if vols.len() != assets {
            return Err(Error::DimensionMismatch {
                what: "volatility vector",
                expected: assets,
                actual: vols.len(),
            });
        }
        if spots.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("spots", "spots must be positive"));
        }
        if vols.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("vols", "volatilities must be nonnegative"));
        }
        if !rate.is_finite() {
            return Err(invalid("rate", "must be finite"));
        }
        let root = correlation_root(assets, rho)?;
        Ok(BlackScholes {
            spots,
            rate,
            vols,
            rho,
            root,
        })
    }

    pub fn assets(&self) -> usize {
        self.spots.len()
    }

    pub fn spots(&self) -> &[f64] {
        &self.spots
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Lower-triangular `L` with `L L^T = Gamma`, row-major.
    pub fn correlation_root(&self) -> &[f64] {
        &self.root
    }
}

/// Cholesky root of the equicorrelation matrix. `rho = 1` is accepted (the
/// matrix is then only semi-definite and every asset loads on the first
/// driver).
fn correlation_root(assets: usize, rho: f64) -> Result<Vec<f64>> {
    let lower = if assets > 1 {
        -1.0 / (assets as f64 - 1.0)
    } else {
        -1.0
    };
    let valid = rho.is_finite() && rho <= 1.0 && (rho > lower || (assets == 1 && rho >= -1.0));
    if !valid {
        return Err(Error::CorrelationOutOfRange { rho, lower, assets });
    }
    let gamma = |i: usize, j: usize| if i == j { 1.0 } else { rho };
    let mut l = vec![0.0; assets * assets];
    for i in 0..assets {
        for j in 0..=i {
            let mut s = gamma(i, j);
            for p in 0..j {
                s -= l[i * assets + p] * l[j * assets + p];
            }
            if i == j {
                l[i * assets + i] = if s > 1e-14 { s.sqrt() } else { 0.0 };
            } else {
                let djj = l[j * assets + j];
                l[i * assets + j] = if djj > 0.0 { s / djj } else { 0.0 };
            }
        }
    }
    Ok(l)
}

/// Heston model; `v0` and `theta` are variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Heston {
    pub spot: f64,
    pub rate: f64,
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub xi: f64,
    pub rho: f64,
}

impl Heston {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(invalid("spot", "must be positive"));
        }
        for (name, v) in [
            ("v0", self.v0),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("xi", self.xi),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be nonnegative, got {v}")));
            }
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::CorrelationOutOfRange {
                rho: self.rho,
                lower: -1.0,
                assets: 2,
            });
        }
        if !self.rate.is_finite() {
            return Err(invalid("rate", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    BlackScholes(BlackScholes),
    Heston(Heston),
}

impl Model {
    /// Brownian dimension `d` of the stored increments.
    pub fn brownian_dims(&self) -> usize {
        match self {
            Model::BlackScholes(bs) => bs.assets(),
            Model::Heston(_) => 2,
        }
    }

    /// Number `d'` of traded assets.
    pub fn assets(&self) -> usize {
        match self {
            Model::BlackScholes(bs) => bs.assets(),
            Model::Heston(_) => 1,
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            Model::BlackScholes(bs) => bs.rate,
            Model::Heston(h) => h.rate,
        }
    }

    pub fn initial_spots(&self) -> Vec<f64> {
        match self {
            Model::BlackScholes(bs) => bs.spots.clone(),
            Model::Heston(h) => vec![h.spot],
        }
    }

    pub fn simulate(
        &self,
        grid: &TimeGrid,
        paths: usize,
        seed: u64,
        run: u64,
        pool: &WorkerPool,
    ) -> Result<SimulatedPaths> {
        if paths == 0 {
            return Err(invalid("paths", "need at least one path"));
        }
        match self {
            Model::BlackScholes(bs) => Ok(simulate_black_scholes(bs, grid, paths, seed, run, pool)),
            Model::Heston(h) => simulate_heston(h, grid, paths, seed, run, pool),
        }
    }
}

/// Simulated state: asset levels on the grid, Heston variance when relevant,
/// and discount factors `e^{-r t_i}`.
#[derive(Debug, Clone)]
pub struct AssetPaths {
    pub paths: usize,
    pub steps: usize,
    pub assets: usize,
    /// `paths x (steps + 1) x assets`
    pub spots: Vec<f64>,
    /// `paths x (steps + 1)`, Heston only
    pub variance: Option<Vec<f64>>,
    pub discount: Vec<f64>,
}

impl AssetPaths {
    #[inline]
    pub fn spot(&self, m: usize, i: usize, j: usize) -> f64 {
        self.spots[(m * (self.steps + 1) + i) * self.assets + j]
    }

    pub fn variance_at(&self, m: usize, i: usize) -> Option<f64> {
        self.variance.as_ref().map(|v| v[m * (self.steps + 1) + i])
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedPaths {
    pub dims: usize,
    /// Normalized increments, `paths x steps x dims`.
    pub increments: Vec<f64>,
    pub assets: AssetPaths,
}

const SIM_CHUNK: usize = 512;

fn discount_factors(rate: f64, grid: &TimeGrid) -> Vec<f64> {
    grid.times().iter().map(|t| (-rate * t).exp()).collect()
}

pub fn simulate_black_scholes(
    bs: &BlackScholes,
    grid: &TimeGrid,
    paths: usize,
    seed: u64,
    run: u64,
    pool: &WorkerPool,
) -> SimulatedPaths {
    let n = grid.steps();
    let d = bs.assets();
    let key = StreamKey::new(seed, run);
    let mut increments = vec![0.0; paths * n * d];
    let mut spots = vec![0.0; paths * (n + 1) * d];
    let drift: Vec<Vec<f64>> = (1..=n)
        .map(|i| {
            bs.vols
                .iter()
                .map(|s| (bs.rate - 0.5 * s * s) * grid.dt(i))
                .collect()
        })
        .collect();
    let diffusion: Vec<Vec<f64>> = (1..=n)
        .map(|i| bs.vols.iter().map(|s| s * grid.dt(i).sqrt()).collect())
        .collect();

    pool.install(|| {
        increments
            .par_chunks_mut(SIM_CHUNK * n * d)
            .zip(spots.par_chunks_mut(SIM_CHUNK * (n + 1) * d))
            .enumerate()
            .for_each(|(c, (g_chunk, s_chunk))| {
                let mut log_ret = vec![0.0; d];
                let mut z = vec![0.0; d];
                for (p, (g, s)) in g_chunk
                    .chunks_mut(n * d)
                    .zip(s_chunk.chunks_mut((n + 1) * d))
                    .enumerate()
                {
                    let m = (c * SIM_CHUNK + p) as u64;
                    log_ret.iter_mut().for_each(|x| *x = 0.0);
                    s[..d].copy_from_slice(&bs.spots);
                    for i in 0..n {
                        let gi = &mut g[i * d..(i + 1) * d];
                        for (j, x) in gi.iter_mut().enumerate() {
                            *x = key.normal(m, i as u32, j as u32);
                        }
                        for (j, zj) in z.iter_mut().enumerate() {
                            let row = &bs.root[j * d..j * d + j + 1];
                            *zj = row.iter().zip(gi.iter()).map(|(l, x)| l * x).sum();
                        }
                        for j in 0..d {
                            log_ret[j] += drift[i][j] + diffusion[i][j] * z[j];
                            s[(i + 1) * d + j] = bs.spots[j] * log_ret[j].exp();
                        }
                    }
                }
            });
    });

    SimulatedPaths {
        dims: d,
        increments,
        assets: AssetPaths {
            paths,
            steps: n,
            assets: d,
            spots,
            variance: None,
            discount: discount_factors(bs.rate, grid),
        },
    }
}

/// Full-truncation Euler scheme in log-spot; `g^1` drives the variance and
/// `rho g^1 + sqrt(1 - rho^2) g^2` the spot.
pub fn simulate_heston(
    h: &Heston,
    grid: &TimeGrid,
    paths: usize,
    seed: u64,
    run: u64,
    pool: &WorkerPool,
) -> Result<SimulatedPaths> {
    h.validate()?;
    let n = grid.steps();
    let key = StreamKey::new(seed, run);
    let mut increments = vec![0.0; paths * n * 2];
    let mut spots = vec![0.0; paths * (n + 1)];
    let mut variance = vec![0.0; paths * (n + 1)];
    let rho_bar = (1.0 - h.rho * h.rho).sqrt();

    pool.install(|| {
        increments
            .par_chunks_mut(SIM_CHUNK * n * 2)
            .zip(spots.par_chunks_mut(SIM_CHUNK * (n + 1)))
            .zip(variance.par_chunks_mut(SIM_CHUNK * (n + 1)))
            .enumerate()
            .for_each(|(c, ((g_chunk, s_chunk), v_chunk))| {
                let rows = g_chunk
                    .chunks_mut(n * 2)
                    .zip(s_chunk.chunks_mut(n + 1))
                    .zip(v_chunk.chunks_mut(n + 1));
                for (p, ((g, s), v)) in rows.enumerate() {
                    let m = (c * SIM_CHUNK + p) as u64;
                    let mut log_ret = 0.0;
                    let mut var = h.v0;
                    s[0] = h.spot;
                    v[0] = var;
                    for i in 0..n {
                        let dt = grid.dt(i + 1);
                        let g1 = key.normal(m, i as u32, 0);
                        let g2 = key.normal(m, i as u32, 1);
                        g[2 * i] = g1;
                        g[2 * i + 1] = g2;
                        let vp = var.max(0.0);
                        let sd = (vp * dt).sqrt();
                        log_ret += (h.rate - 0.5 * vp) * dt + sd * (h.rho * g1 + rho_bar * g2);
                        var += h.kappa * (h.theta - vp) * dt + h.xi * sd * g1;
                        s[i + 1] = h.spot * log_ret.exp();
                        v[i + 1] = var;
                    }
                }
            });
    });

    Ok(SimulatedPaths {
        dims: 2,
        increments,
        assets: AssetPaths {
            paths,
            steps: n,
            assets: 1,
            spots,
            variance: Some(variance),
            discount: discount_factors(h.rate, grid),
        },
    })
}
