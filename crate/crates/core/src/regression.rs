//! Monte Carlo estimation of chaos coefficients and evaluation of truncated
//! expansions as conditional expectations.

use std::ops::Range;

use crate::basis::{BasisCatalog, CatalogShape};
use crate::error::{Error, Result};
use crate::kernel::Workspace;
use crate::reduce::{self, Granularity};

/// Normalized Brownian increments and discounted payoffs of `M` paths.
///
/// `increments` is path-major with `n * d` entries per path (increment-major
/// inside a path); `payoffs` holds `N + 1` discounted payoffs per path for the
/// dates `T_0 .. T_N`. `date_map[k]` is the grid index of `T_k`.
#[derive(Debug, Clone)]
pub struct PathBatch {
    paths: usize,
    steps: usize,
    dims: usize,
    increments: Vec<f64>,
    payoffs: Vec<f64>,
    date_map: Vec<usize>,
    exercisable: Vec<bool>,
}

impl PathBatch {
    pub fn new(
        paths: usize,
        steps: usize,
        dims: usize,
        increments: Vec<f64>,
        payoffs: Vec<f64>,
        date_map: Vec<usize>,
    ) -> Result<Self> {
        if paths == 0 {
            return Err(crate::error::invalid("paths", "need at least one path"));
        }
        if steps == 0 || dims == 0 {
            return Err(Error::EmptyBasis {
                increments: steps,
                dims,
            });
        }
        if increments.len() != paths * steps * dims {
            return Err(Error::DimensionMismatch {
                what: "increment buffer length",
                expected: paths * steps * dims,
                actual: increments.len(),
            });
        }
        if date_map.len() < 2 || date_map[0] != 0 || *date_map.last().unwrap() != steps {
            return Err(Error::InvalidGrid(format!(
                "date map must start at 0 and end at {steps}, got {date_map:?}"
            )));
        }
        if date_map.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "date map must be strictly increasing".into(),
            ));
        }
        let dates = date_map.len();
        if payoffs.len() != paths * dates {
            return Err(Error::DimensionMismatch {
                what: "payoff matrix length",
                expected: paths * dates,
                actual: payoffs.len(),
            });
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(crate::error::invalid("increments", "non-finite entry"));
        }
        if payoffs.iter().any(|x| !x.is_finite()) {
            return Err(crate::error::invalid("payoffs", "non-finite entry"));
        }
        Ok(PathBatch {
            paths,
            steps,
            dims,
            increments,
            payoffs,
            date_map,
            exercisable: vec![true; dates],
        })
    }

    /// Marks which dates take part in the exercise decision.
    pub fn with_exercisable(mut self, exercisable: Vec<bool>) -> Result<Self> {
        if exercisable.len() != self.date_map.len() {
            return Err(Error::DimensionMismatch {
                what: "exercisable flags",
                expected: self.date_map.len(),
                actual: exercisable.len(),
            });
        }
        self.exercisable = exercisable;
        Ok(self)
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Number of grid increments `n`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Brownian dimension `d`.
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Index `N` of the last exercise date.
    pub fn last_date(&self) -> usize {
        self.date_map.len() - 1
    }

    pub fn date_map(&self) -> &[usize] {
        &self.date_map
    }

    pub fn grid_index(&self, k: usize) -> usize {
        self.date_map[k]
    }

    pub fn is_exercisable(&self, k: usize) -> bool {
        self.exercisable[k]
    }

    pub fn increment_row(&self, m: usize) -> &[f64] {
        let w = self.steps * self.dims;
        &self.increments[m * w..(m + 1) * w]
    }

    pub fn increment_row_mut(&mut self, m: usize) -> &mut [f64] {
        let w = self.steps * self.dims;
        &mut self.increments[m * w..(m + 1) * w]
    }

    #[inline]
    pub fn payoff(&self, m: usize, k: usize) -> f64 {
        self.payoffs[m * self.date_map.len() + k]
    }

    pub fn payoff_row(&self, m: usize) -> &[f64] {
        let w = self.date_map.len();
        &self.payoffs[m * w..(m + 1) * w]
    }

    pub(crate) fn check_catalog(&self, catalog: &BasisCatalog) -> Result<()> {
        if catalog.increments() != self.steps {
            return Err(Error::DimensionMismatch {
                what: "catalog increments vs batch steps",
                expected: self.steps,
                actual: catalog.increments(),
            });
        }
        if catalog.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                what: "catalog dimension vs batch dimension",
                expected: self.dims,
                actual: catalog.dims(),
            });
        }
        Ok(())
    }
}

/// Estimated coefficients `lambda_alpha` for the indices measurable at
/// increment `cutoff_increment`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosCoefficients {
    pub shape: CatalogShape,
    pub values: Vec<f64>,
    pub cutoff_increment: usize,
    pub sample_count: usize,
}

fn check_cutoff(catalog: &BasisCatalog, k: usize) -> Result<()> {
    if k > catalog.increments() {
        return Err(Error::CutoffOutOfRange {
            cutoff: k,
            increments: catalog.increments(),
        });
    }
    Ok(())
}

/// Unnormalized sums `sum_{m in range} w_m H_alpha(G^(m))` where
/// `w_m = targets[m]` times the optional mask. Paths with zero weight are
/// skipped; this is exact for finite data.
pub fn partial_sums(
    catalog: &BasisCatalog,
    batch: &PathBatch,
    targets: &[f64],
    k: usize,
    mask: Option<&[bool]>,
    range: Range<usize>,
) -> Result<Vec<f64>> {
    batch.check_catalog(catalog)?;
    check_cutoff(catalog, k)?;
    check_len("targets", targets.len(), batch.paths())?;
    if let Some(mask) = mask {
        check_len("mask", mask.len(), batch.paths())?;
    }
    let mut out = vec![0.0; catalog.cutoff(k)];
    Workspace::new().accumulate(catalog, batch, k, weighted(targets, mask, range), &mut out);
    Ok(out)
}

fn weighted<'a>(
    targets: &'a [f64],
    mask: Option<&'a [bool]>,
    range: Range<usize>,
) -> impl Iterator<Item = (usize, f64)> + 'a {
    range.filter_map(move |m| {
        let keep = mask.is_none_or(|mk| mk[m]);
        let w = targets[m];
        (keep && w != 0.0).then_some((m, w))
    })
}

fn check_len(what: &'static str, actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Turns reduced sums over all `paths` samples into coefficients:
/// `lambda_a = sums[a] / (M * alpha!)`.
pub fn normalize(
    catalog: &BasisCatalog,
    mut sums: Vec<f64>,
    paths: usize,
    k: usize,
) -> ChaosCoefficients {
    for (s, ix) in sums.iter_mut().zip(catalog.indices()) {
        *s /= paths as f64 * ix.factorial() as f64;
    }
    ChaosCoefficients {
        shape: catalog.shape(),
        values: sums,
        cutoff_increment: k,
        sample_count: paths,
    }
}

/// In-the-money indicator `Z_{T_k} > 0` for every path.
pub fn itm_mask(batch: &PathBatch, k: usize) -> Vec<bool> {
    (0..batch.paths())
        .map(|m| batch.payoff(m, k) > 0.0)
        .collect()
}

/// `lambda_a = 1/(M alpha!) sum_l targets[l] mask[l] H_alpha(G^(l))` for the
/// indices measurable at increment `k`, with the default summation structure.
pub fn estimate_coefficients(
    catalog: &BasisCatalog,
    batch: &PathBatch,
    targets: &[f64],
    k: usize,
    mask: Option<&[bool]>,
) -> Result<ChaosCoefficients> {
    estimate_coefficients_with(catalog, batch, targets, k, mask, Granularity::default())
}

pub fn estimate_coefficients_with(
    catalog: &BasisCatalog,
    batch: &PathBatch,
    targets: &[f64],
    k: usize,
    mask: Option<&[bool]>,
    granularity: Granularity,
) -> Result<ChaosCoefficients> {
    batch.check_catalog(catalog)?;
    check_cutoff(catalog, k)?;
    check_len("targets", targets.len(), batch.paths())?;
    if let Some(mask) = mask {
        check_len("mask", mask.len(), batch.paths())?;
    }
    granularity.validate()?;
    let up_to = catalog.cutoff(k);
    let mut ws = Workspace::new();
    let sums = match granularity {
        Granularity::Fixed { leaves } => {
            let mut leaf = |i: usize| {
                let mut out = vec![0.0; up_to];
                let range = reduce::leaf_range(batch.paths(), leaves, i);
                ws.accumulate(catalog, batch, k, weighted(targets, mask, range), &mut out);
                out
            };
            reduce::node_sum(leaves.trailing_zeros(), 0, &mut leaf)
        }
        Granularity::PerWorker => {
            let mut out = vec![0.0; up_to];
            ws.accumulate(
                catalog,
                batch,
                k,
                weighted(targets, mask, 0..batch.paths()),
                &mut out,
            );
            out
        }
    };
    Ok(normalize(catalog, sums, batch.paths(), k))
}

/// `sum_a values[a] H_alpha(a)(G^(m))`; only increments `1..=k` of path `m`
/// are read.
pub fn conditional_expectation(
    catalog: &BasisCatalog,
    coeffs: &ChaosCoefficients,
    batch: &PathBatch,
    m: usize,
) -> Result<f64> {
    batch.check_catalog(catalog)?;
    if coeffs.shape != catalog.shape() {
        return Err(Error::DimensionMismatch {
            what: "coefficient catalog",
            expected: catalog.len(),
            actual: coeffs.values.len(),
        });
    }
    let k = coeffs.cutoff_increment;
    check_cutoff(catalog, k)?;
    check_len("coefficient count", coeffs.values.len(), catalog.cutoff(k))?;
    if m >= batch.paths() {
        return Err(Error::DimensionMismatch {
            what: "path index",
            expected: batch.paths(),
            actual: m,
        });
    }
    let row = catalog.eval_row(batch.increment_row(m), coeffs.values.len())?;
    let mut s = 0.0;
    for (c, v) in coeffs.values.iter().zip(&row) {
        s += c * v;
    }
    Ok(s)
}

/// Conditional expectation of every path at once; bitwise equal to calling
/// [`conditional_expectation`] path by path.
pub fn conditional_expectations(
    catalog: &BasisCatalog,
    coeffs: &ChaosCoefficients,
    batch: &PathBatch,
) -> Result<Vec<f64>> {
    batch.check_catalog(catalog)?;
    let k = coeffs.cutoff_increment;
    check_cutoff(catalog, k)?;
    check_len("coefficient count", coeffs.values.len(), catalog.cutoff(k))?;
    let mut out = vec![0.0; batch.paths()];
    Workspace::new().evaluate(
        catalog,
        batch,
        k,
        &coeffs.values,
        0..batch.paths(),
        |m, c| out[m] = c,
    );
    Ok(out)
}

/// Drops the indices that are not measurable at increment `k`.
pub fn project_truncate(
    catalog: &BasisCatalog,
    coeffs: &ChaosCoefficients,
    k: usize,
) -> Result<ChaosCoefficients> {
    if k > coeffs.cutoff_increment {
        return Err(Error::CutoffOutOfRange {
            cutoff: k,
            increments: coeffs.cutoff_increment,
        });
    }
    Ok(ChaosCoefficients {
        shape: coeffs.shape,
        values: coeffs.values[..catalog.cutoff(k)].to_vec(),
        cutoff_increment: k,
        sample_count: coeffs.sample_count,
    })
}
