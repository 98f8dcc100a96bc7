mod common;

use chaos_bermudan::reduce::Granularity;
use chaos_bermudan::regression::{
    conditional_expectations, estimate_coefficients_with, itm_mask, partial_sums, project_truncate,
};
use chaos_bermudan::stats::ols_slope;
use chaos_bermudan::{
    conditional_expectation, estimate_coefficients, BasisCatalog, ChaosCoefficients,
};

type Term<'a> = (&'a [(usize, usize, u32)], f64);

fn coefficients(catalog: &BasisCatalog, k: usize, terms: &[Term]) -> ChaosCoefficients {
    let mut values = vec![0.0; catalog.cutoff(k)];
    for (entries, c) in terms {
        values[common::slot(catalog, entries)] += c;
    }
    ChaosCoefficients {
        shape: catalog.shape(),
        values,
        cutoff_increment: k,
        sample_count: 0,
    }
}

#[test]
fn polynomial_targets_are_reproduced_exactly() {
    // F = 1 + 2 x + 0.5 x y - y^2 + 3 x^3 with x = g_{1,1}, y = g_{2,1}.
    // In Hermite form: 11 H1(x) + 0.5 H1(x) H1(y) - H2(y) + 3 H3(x).
    let cat = BasisCatalog::enumerate(3, 2, 1).unwrap();
    let lam = coefficients(
        &cat,
        2,
        &[
            (&[(1, 1, 1)], 11.0),
            (&[(1, 1, 1), (2, 1, 1)], 0.5),
            (&[(2, 1, 2)], -1.0),
            (&[(1, 1, 3)], 3.0),
        ],
    );
    let paths = 500;
    let g = common::gaussians(5, paths, 2, 1);
    let b = common::batch(paths, 2, 1, g.clone(), common::zero_payoffs(paths, 2));
    let all = conditional_expectations(&cat, &lam, &b).unwrap();
    for m in 0..paths {
        let (x, y) = (g[2 * m], g[2 * m + 1]);
        let f = 1.0 + 2.0 * x + 0.5 * x * y - y * y + 3.0 * x.powi(3);
        let c = conditional_expectation(&cat, &lam, &b, m).unwrap();
        assert!(
            (c - f).abs() <= 1e-10 * f.abs().max(1.0),
            "path {m}: {c} vs {f}"
        );
        assert_eq!(c.to_bits(), all[m].to_bits());
    }
}

#[test]
fn multidimensional_polynomial_is_reproduced() {
    // F = x1 y2 + (x2^2 - 1) z1 with x = increment 1, y = increment 2,
    // z = increment 3 and the second index the Brownian dimension.
    let cat = BasisCatalog::enumerate(3, 3, 2).unwrap();
    let lam = coefficients(
        &cat,
        3,
        &[
            (&[(1, 1, 1), (2, 2, 1)], 1.0),
            (&[(1, 2, 2), (3, 1, 1)], 1.0),
        ],
    );
    let paths = 200;
    let g = common::gaussians(9, paths, 3, 2);
    let b = common::batch(paths, 3, 2, g.clone(), common::zero_payoffs(paths, 3));
    for m in 0..paths {
        let r = &g[6 * m..6 * m + 6];
        let f = r[0] * r[3] + (r[1] * r[1] - 1.0) * r[4];
        let c = conditional_expectation(&cat, &lam, &b, m).unwrap();
        assert!((c - f).abs() <= 1e-10 * f.abs().max(1.0));
    }
}

#[test]
fn truncation_agrees_bitwise_with_direct_estimate() {
    let cat = BasisCatalog::enumerate(3, 4, 2).unwrap();
    let paths = 3000;
    let g = common::gaussians(17, paths, 4, 2);
    let targets: Vec<f64> = (0..paths)
        .map(|m| (g[8 * m] + 0.3 * g[8 * m + 5]).exp())
        .collect();
    let b = common::batch(paths, 4, 2, g, common::zero_payoffs(paths, 4));
    for granularity in [Granularity::default(), Granularity::PerWorker] {
        let full = estimate_coefficients_with(&cat, &b, &targets, 4, None, granularity).unwrap();
        for k in 0..4 {
            let direct =
                estimate_coefficients_with(&cat, &b, &targets, k, None, granularity).unwrap();
            let truncated = project_truncate(&cat, &full, k).unwrap();
            let bits =
                |c: &ChaosCoefficients| c.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&direct), bits(&truncated), "k={k}");
        }
    }
}

#[test]
fn batched_and_single_path_evaluation_agree_bitwise() {
    let cat = BasisCatalog::enumerate(3, 5, 1).unwrap();
    let paths = 1001;
    let g = common::gaussians(3, paths, 5, 1);
    let targets: Vec<f64> = g
        .chunks(5)
        .map(|r| (r.iter().sum::<f64>() * 0.2).max(0.0))
        .collect();
    let b = common::batch(paths, 5, 1, g, common::zero_payoffs(paths, 5));
    let lam = estimate_coefficients(&cat, &b, &targets, 3, None).unwrap();
    let all = conditional_expectations(&cat, &lam, &b).unwrap();
    for (m, v) in all.iter().enumerate() {
        assert_eq!(
            conditional_expectation(&cat, &lam, &b, m)
                .unwrap()
                .to_bits(),
            v.to_bits()
        );
    }
}

#[test]
fn default_estimate_matches_plain_sum() {
    let cat = BasisCatalog::enumerate(2, 3, 2).unwrap();
    let paths = 777;
    let g = common::gaussians(41, paths, 3, 2);
    let targets: Vec<f64> = (0..paths).map(|m| 1.0 + (m % 7) as f64).collect();
    let b = common::batch(paths, 3, 2, g.clone(), common::zero_payoffs(paths, 3));
    let lam = estimate_coefficients(&cat, &b, &targets, 3, None).unwrap();
    for (a, ix) in cat.indices().iter().enumerate() {
        let mut s = 0.0;
        for m in 0..paths {
            s += targets[m] * ix.eval(&g[6 * m..6 * m + 6]);
        }
        let expected = s / (paths as f64 * ix.factorial() as f64);
        assert!((lam.values[a] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}

#[test]
fn itm_mask_keeps_divisor() {
    let cat = BasisCatalog::enumerate(1, 1, 1).unwrap();
    let paths = 4;
    let g = vec![1.0, -1.0, 2.0, 0.5];
    let payoffs = vec![0.0, 1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 2.0];
    let b = common::batch(paths, 1, 1, g, payoffs);
    let mask = itm_mask(&b, 1);
    assert_eq!(mask, vec![true, false, true, true]);
    let targets = [2.0, 4.0, 6.0, 8.0];
    let lam = estimate_coefficients(&cat, &b, &targets, 1, Some(&mask)).unwrap();
    assert_eq!(lam.values, vec![16.0 / 4.0, (2.0 + 12.0 + 4.0) / 4.0]);
    let raw = partial_sums(&cat, &b, &targets, 1, Some(&mask), 1..3).unwrap();
    assert_eq!(raw, vec![6.0, 12.0]);
}

/// `F = exp(b1 G1 + b2 G2)` has `lambda_(a1, a2) = prod b^a e^(b^2/2) / a!`.
fn exponential_coefficients(cat: &BasisCatalog, beta: [f64; 2]) -> Vec<f64> {
    cat.indices()
        .iter()
        .map(|ix| {
            let d = ix.dense(2);
            (0..2)
                .map(|i| {
                    let a = d[i] as i32;
                    beta[i].powi(a) * (0.5 * beta[i] * beta[i]).exp()
                        / (1..=a).map(f64::from).product::<f64>()
                })
                .product()
        })
        .collect()
}

#[test]
fn coefficient_error_decays_at_monte_carlo_rate() {
    let beta = [0.4, -0.3];
    let cat = BasisCatalog::enumerate(3, 2, 1).unwrap();
    let exact = exponential_coefficients(&cat, beta);
    let sizes = [1_000usize, 10_000, 100_000];
    let reps = 12;
    let mut log_m = Vec::new();
    let mut log_err = Vec::new();
    for &paths in &sizes {
        let mut sq = 0.0;
        for r in 0..reps {
            let g = common::gaussians(1000 + r, paths, 2, 1);
            let targets: Vec<f64> = g
                .chunks(2)
                .map(|x| (beta[0] * x[0] + beta[1] * x[1]).exp())
                .collect();
            let b = common::batch(paths, 2, 1, g, common::zero_payoffs(paths, 2));
            let lam = estimate_coefficients(&cat, &b, &targets, 2, None).unwrap();
            sq += lam
                .values
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        log_m.push((paths as f64).ln());
        log_err.push((sq / reps as f64).sqrt().ln());
    }
    let slope = ols_slope(&log_m, &log_err);
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn expansion_beats_perturbed_coefficients_in_mean_square() {
    let beta = [0.5, 0.2];
    let cat = BasisCatalog::enumerate(2, 2, 1).unwrap();
    let paths = 50_000;
    let g = common::gaussians(77, paths, 2, 1);
    let targets: Vec<f64> = g
        .chunks(2)
        .map(|x| (beta[0] * x[0] + beta[1] * x[1]).exp())
        .collect();
    let b = common::batch(paths, 2, 1, g, common::zero_payoffs(paths, 2));
    let lam = estimate_coefficients(&cat, &b, &targets, 2, None).unwrap();
    let mse = |c: &ChaosCoefficients| {
        let fit = conditional_expectations(&cat, c, &b).unwrap();
        fit.iter()
            .zip(&targets)
            .map(|(f, t)| (f - t).powi(2))
            .sum::<f64>()
            / paths as f64
    };
    let best = mse(&lam);
    for a in 0..lam.values.len() {
        for delta in [-0.05, 0.05] {
            let mut other = lam.clone();
            other.values[a] += delta;
            assert!(mse(&other) > best * (1.0 - 1e-3), "index {a}");
        }
    }
}
