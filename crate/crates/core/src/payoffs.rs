//! Discounted payoff matrices `Z[m][k] = e^{-r T_k} payoff(path m, T_k)`.

use crate::error::{invalid, Error, Result};
use crate::models::{AssetPaths, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffSpec {
    /// `(K - S)_+` on a single asset.
    Put { strike: f64 },
    /// `(K - sum_j w_j S^j)_+`.
    BasketPut { strike: f64, weights: Vec<f64> },
    /// `(S_{T_i} - X_i)_+` with `X_i` the mean of `S_{T_j}` over
    /// `j = i - window - delay + 1 ..= i - delay`, counted in exercise dates.
    MovingAverageCall { window: usize, delay: usize },
}

impl PayoffSpec {
    /// Moving-average call with window and delay given in years on a grid of
    /// `dates` exercise dates up to `maturity`.
    pub fn moving_average(
        window_years: f64,
        delay_years: f64,
        maturity: f64,
        dates: usize,
    ) -> Result<Self> {
        let to_dates = |name: &'static str, years: f64| -> Result<usize> {
            let x = years / maturity * dates as f64;
            let r = x.round();
            if years.is_nan() || years < 0.0 || (x - r).abs() > 1e-9 * x.abs().max(1.0) {
                return Err(invalid(
                    name,
                    format!("{years} years is not a whole number of exercise dates ({x})"),
                ));
            }
            Ok(r as usize)
        };
        let window = to_dates("window", window_years)?;
        let delay = to_dates("delay", delay_years)?;
        if window == 0 {
            return Err(invalid("window", "must cover at least one exercise date"));
        }
        Ok(PayoffSpec::MovingAverageCall { window, delay })
    }

    pub fn validate(&self, assets: usize) -> Result<()> {
        match self {
            PayoffSpec::Put { strike } => {
                check_strike(*strike)?;
                if assets != 1 {
                    return Err(Error::DimensionMismatch {
                        what: "put needs a single asset",
                        expected: 1,
                        actual: assets,
                    });
                }
            }
            PayoffSpec::BasketPut { strike, weights } => {
                check_strike(*strike)?;
                if weights.len() != assets {
                    return Err(Error::DimensionMismatch {
                        what: "basket weights",
                        expected: assets,
                        actual: weights.len(),
                    });
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid("weights", format!("must sum to 1, got {total}")));
                }
            }
            PayoffSpec::MovingAverageCall { window, .. } => {
                if *window == 0 {
                    return Err(invalid("window", "must cover at least one exercise date"));
                }
                if assets != 1 {
                    return Err(Error::DimensionMismatch {
                        what: "moving average needs a single asset",
                        expected: 1,
                        actual: assets,
                    });
                }
            }
        }
        Ok(())
    }

    /// Whether date `k` takes part in exercise decisions.
    pub fn exercisable(&self, k: usize) -> bool {
        match self {
            PayoffSpec::MovingAverageCall { window, delay } => k >= window + delay && k >= 1,
            _ => true,
        }
    }

    /// Undiscounted payoff of path `m` at exercise date `k`.
    pub fn intrinsic(&self, paths: &AssetPaths, grid: &TimeGrid, m: usize, k: usize) -> f64 {
        let spot = |k: usize, j: usize| paths.spot(m, grid.date_map()[k], j);
        match self {
            PayoffSpec::Put { strike } => (strike - spot(k, 0)).max(0.0),
            PayoffSpec::BasketPut { strike, weights } => {
                let basket: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * spot(k, j))
                    .sum();
                (strike - basket).max(0.0)
            }
            PayoffSpec::MovingAverageCall { window, delay } => {
                if !self.exercisable(k) {
                    return 0.0;
                }
                let hi = k - delay;
                let lo = hi + 1 - window;
                let avg = (lo..=hi).map(|j| spot(j, 0)).sum::<f64>() / *window as f64;
                (spot(k, 0) - avg).max(0.0)
            }
        }
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(invalid("strike", format!("must be positive, got {strike}")));
    }
    Ok(())
}

/// Discounted payoffs for dates `0..=N` of every path, with the per-date
/// exercisable flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    pub dates: usize,
    /// `paths x (dates + 1)`
    pub values: Vec<f64>,
    pub exercisable: Vec<bool>,
}

pub fn compute_payoff_matrix(
    spec: &PayoffSpec,
    paths: &AssetPaths,
    grid: &TimeGrid,
) -> Result<PayoffMatrix> {
    spec.validate(paths.assets)?;
    if paths.steps != grid.steps() {
        return Err(Error::DimensionMismatch {
            what: "grid steps vs simulated steps",
            expected: grid.steps(),
            actual: paths.steps,
        });
    }
    let dates = grid.dates();
    let exercisable: Vec<bool> = (0..=dates).map(|k| spec.exercisable(k)).collect();
    if !exercisable[1..].iter().any(|&e| e) {
        return Err(Error::NoExercisableDate(format!(
            "{spec:?} needs more history than the {dates} exercise dates provide"
        )));
    }
    let disc: Vec<f64> = (0..=dates)
        .map(|k| paths.discount[grid.date_map()[k]])
        .collect();
    let mut values = vec![0.0; paths.paths * (dates + 1)];
    for (m, row) in values.chunks_mut(dates + 1).enumerate() {
        for (k, z) in row.iter_mut().enumerate() {
            *z = disc[k] * spec.intrinsic(paths, grid, m, k);
        }
    }
    Ok(PayoffMatrix {
        dates,
        values,
        exercisable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_paths(levels: &[f64], steps: usize, rate: f64, grid: &TimeGrid) -> AssetPaths {
        let assets = levels.len();
        let mut spots = Vec::new();
        for _ in 0..=steps {
            spots.extend_from_slice(levels);
        }
        AssetPaths {
            paths: 1,
            steps,
            assets,
            spots,
            variance: None,
            discount: grid.times().iter().map(|t| (-rate * t).exp()).collect(),
        }
    }

    #[test]
    fn at_the_money_put_is_worthless() {
        let grid = TimeGrid::uniform(1.0, 2, 2).unwrap();
        let p = flat_paths(&[100.0], 2, 0.0, &grid);
        let z = compute_payoff_matrix(&PayoffSpec::Put { strike: 100.0 }, &p, &grid).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn basket_put_hand_value() {
        let grid = TimeGrid::uniform(1.0, 2, 2).unwrap();
        let p = flat_paths(&[90.0; 5], 2, 0.0, &grid);
        let spec = PayoffSpec::BasketPut {
            strike: 100.0,
            weights: vec![0.2; 5],
        };
        let z = compute_payoff_matrix(&spec, &p, &grid).unwrap();
        for v in z.values {
            assert!((v - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_average_on_constant_path() {
        let grid = TimeGrid::uniform(1.0, 10, 10).unwrap();
        let p = flat_paths(&[100.0], 10, 0.05, &grid);
        let spec = PayoffSpec::MovingAverageCall {
            window: 5,
            delay: 0,
        };
        let z = compute_payoff_matrix(&spec, &p, &grid).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        assert_eq!(z.exercisable[..5], [false; 5]);
        assert!(z.exercisable[5..].iter().all(|&e| e));
    }

    #[test]
    fn moving_average_window_counts() {
        let spec = PayoffSpec::moving_average(0.02, 0.08, 0.2, 50).unwrap();
        assert_eq!(
            spec,
            PayoffSpec::MovingAverageCall {
                window: 5,
                delay: 20
            }
        );
        let spec = PayoffSpec::moving_average(0.04, 0.0, 0.2, 50).unwrap();
        assert_eq!(
            spec,
            PayoffSpec::MovingAverageCall {
                window: 10,
                delay: 0
            }
        );
        assert!(PayoffSpec::moving_average(0.03, 0.0, 0.2, 10).is_err());
    }

    #[test]
    fn moving_average_hand_values() {
        let grid = TimeGrid::uniform(1.0, 4, 4).unwrap();
        let spots = vec![100.0, 101.0, 102.0, 103.0, 110.0];
        let p = AssetPaths {
            paths: 1,
            steps: 4,
            assets: 1,
            spots,
            variance: None,
            discount: vec![1.0; 5],
        };
        let spec = PayoffSpec::MovingAverageCall {
            window: 2,
            delay: 1,
        };
        let z = compute_payoff_matrix(&spec, &p, &grid).unwrap();
        // Date 3: average of S_1, S_2; date 4: average of S_2, S_3.
        assert_eq!(z.values, vec![0.0, 0.0, 0.0, 1.5, 7.5]);
    }

    #[test]
    fn too_long_window_is_rejected() {
        let grid = TimeGrid::uniform(1.0, 4, 4).unwrap();
        let p = flat_paths(&[100.0], 4, 0.0, &grid);
        let spec = PayoffSpec::MovingAverageCall {
            window: 4,
            delay: 1,
        };
        assert!(matches!(
            compute_payoff_matrix(&spec, &p, &grid),
            Err(Error::NoExercisableDate(_))
        ));
    }

    #[test]
    fn discounting() {
        let grid = TimeGrid::uniform(1.0, 2, 2).unwrap();
        let p = flat_paths(&[90.0], 2, 0.1, &grid);
        let z = compute_payoff_matrix(&PayoffSpec::Put { strike: 100.0 }, &p, &grid).unwrap();
        assert_eq!(z.values[0], 10.0);
        assert!((z.values[2] - 10.0 * (-0.1f64).exp()).abs() < 1e-12);
    }
}
