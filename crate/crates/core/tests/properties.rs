mod common;

use chaos_bermudan::reduce::{assemble, dyadic_cover, leaf_range, node_sum, TreeNode};
use chaos_bermudan::regression::{conditional_expectations, project_truncate};
use chaos_bermudan::rng::draw_increment;
use chaos_bermudan::{estimate_coefficients, BasisCatalog};
use proptest::prelude::*;

fn leaf_values(leaves: usize, width: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..leaves)
        .map(|i| {
            (0..width)
                .map(|j| draw_increment(seed, 0, i as u64, j as u32, 0) * 1e3)
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_contiguous_split_reduces_to_the_same_bits(
        log_leaves in 0u32..7,
        cuts in proptest::collection::vec(0.0f64..1.0, 0..10),
        seed in 0u64..1000,
    ) {
        let leaves = 1usize << log_leaves;
        let values = leaf_values(leaves, 3, seed);
        let full = node_sum(log_leaves, 0, &mut |i| values[i].clone());
        let mut bounds: Vec<usize> = cuts.iter().map(|c| (c * leaves as f64) as usize).collect();
        bounds.push(0);
        bounds.push(leaves);
        bounds.sort_unstable();
        let mut pieces = Vec::new();
        for w in bounds.windows(2) {
            for (level, index) in dyadic_cover(w[0], w[1]) {
                pieces.push(TreeNode { level, index, sums: node_sum(level, index, &mut |i| values[i].clone()) });
            }
        }
        let root = assemble(pieces, leaves);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&root), bits(&full));
    }

    #[test]
    fn leaf_ranges_cover_paths_in_order(paths in 0usize..10_000, log_leaves in 0u32..8) {
        let leaves = 1usize << log_leaves;
        let mut next = 0;
        for i in 0..leaves {
            let r = leaf_range(paths, leaves, i);
            prop_assert_eq!(r.start, next);
            next = r.end;
        }
        prop_assert_eq!(next, paths);
    }

    #[test]
    fn draws_do_not_depend_on_call_order(seed in any::<u64>(), run in 0u64..100, path in any::<u32>(), step in 0u32..64) {
        let a = draw_increment(seed, run, path as u64, step, 1);
        let _ = draw_increment(seed, run + 1, path as u64, step, 1);
        prop_assert_eq!(a.to_bits(), draw_increment(seed, run, path as u64, step, 1).to_bits());
        prop_assert!(a.is_finite());
    }

    #[test]
    fn estimator_is_linear_in_the_targets(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..50) {
        let cat = BasisCatalog::enumerate(2, 3, 1).unwrap();
        let paths = 256;
        let g = common::gaussians(seed, paths, 3, 1);
        let t1: Vec<f64> = g.chunks(3).map(|r| r[0].exp()).collect();
        let t2: Vec<f64> = g.chunks(3).map(|r| (r[1] - r[2]).max(0.0)).collect();
        let mixed: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| a * x + b * y).collect();
        let batch = common::batch(paths, 3, 1, g, common::zero_payoffs(paths, 3));
        let l1 = estimate_coefficients(&cat, &batch, &t1, 3, None).unwrap();
        let l2 = estimate_coefficients(&cat, &batch, &t2, 3, None).unwrap();
        let lm = estimate_coefficients(&cat, &batch, &mixed, 3, None).unwrap();
        for i in 0..lm.values.len() {
            let expected = a * l1.values[i] + b * l2.values[i];
            prop_assert!((lm.values[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn conditioning_twice_equals_conditioning_once(seed in 0u64..50, k in 0usize..3, j in 0usize..3) {
        let (early, late) = (k.min(j), k.max(j));
        let cat = BasisCatalog::enumerate(3, 3, 2).unwrap();
        let paths = 300;
        let g = common::gaussians(seed, paths, 3, 2);
        let targets: Vec<f64> = g.chunks(6).map(|r| (0.5 * r[0] - 0.2 * r[5]).exp()).collect();
        let batch = common::batch(paths, 3, 2, g, common::zero_payoffs(paths, 3));
        let full = estimate_coefficients(&cat, &batch, &targets, 3, None).unwrap();
        let direct = project_truncate(&cat, &full, early).unwrap();
        let nested = project_truncate(&cat, &project_truncate(&cat, &full, late).unwrap(), early).unwrap();
        prop_assert_eq!(&direct.values, &nested.values);
        let a = conditional_expectations(&cat, &direct, &batch).unwrap();
        let b = conditional_expectations(&cat, &nested, &batch).unwrap();
        prop_assert_eq!(a, b);
    }
}
