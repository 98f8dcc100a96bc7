//! Lane-blocked evaluation of the chaos basis on groups of paths.
//!
//! Basis values for `LANES` paths are stored side by side so that building
//! them from the catalog's parent plan, accumulating weighted sums and
//! evaluating expansions all vectorize across paths.
//!
//! Summation order inside one call to [`Workspace::accumulate`]: the `i`-th
//! contributing path goes to lane `i % LANES`; each lane accumulates its
//! paths in order, and lanes are folded `0..LANES` left to right at the end.
//! Expansion values are summed over basis indices left to right, exactly as
//! [`crate::regression::conditional_expectation`] does on a single path.

use crate::basis::BasisCatalog;
use crate::regression::PathBatch;

pub(crate) const LANES: usize = 8;
type Lane = [f64; LANES];

#[derive(Debug, Default)]
pub(crate) struct Workspace {
    hermite: Vec<Lane>,
    values: Vec<Lane>,
    acc: Vec<Lane>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Hermite values `H_e(g)` of every position up to increment `k` for up
    /// to `LANES` paths; unused lanes see zero increments.
    fn load_hermite(
        &mut self,
        catalog: &BasisCatalog,
        batch: &PathBatch,
        paths: &[usize],
        k: usize,
    ) {
        let stride = catalog.order() + 1;
        let positions = k * catalog.dims();
        if self.hermite.len() < positions * stride {
            self.hermite.resize(positions * stride, [0.0; LANES]);
        }
        let mut x = [0.0; LANES];
        for f in 0..positions {
            for (l, &m) in paths.iter().enumerate() {
                x[l] = batch.increment_row(m)[f];
            }
            for v in x.iter_mut().skip(paths.len()) {
                *v = 0.0;
            }
            let h = &mut self.hermite[f * stride..(f + 1) * stride];
            h[0] = [1.0; LANES];
            if stride > 1 {
                h[1] = x;
            }
            for e in 2..stride {
                let c = (e - 1) as f64;
                let mut next = [0.0; LANES];
                for l in 0..LANES {
                    next[l] = x[l] * h[e - 1][l] - c * h[e - 2][l];
                }
                h[e] = next;
            }
        }
    }

    /// Builds the basis values from the parent plan and hands each one to
    /// `each(a, value)` as soon as it is known.
    #[inline(always)]
    fn sweep<F: FnMut(usize, &Lane)>(&mut self, catalog: &BasisCatalog, up_to: usize, mut each: F) {
        if self.values.len() < up_to {
            self.values.resize(up_to, [0.0; LANES]);
        }
        let (parent, slot) = catalog.plan();
        let values = &mut self.values[..up_to];
        let hermite = &self.hermite;
        values[0] = [1.0; LANES];
        each(0, &values[0]);
        for a in 1..up_to {
            let pv = values[parent[a] as usize];
            let hv = hermite[slot[a] as usize];
            let mut v = [0.0; LANES];
            for l in 0..LANES {
                v[l] = pv[l] * hv[l];
            }
            values[a] = v;
            each(a, &v);
        }
    }

    fn accumulate_group(
        &mut self,
        catalog: &BasisCatalog,
        batch: &PathBatch,
        k: usize,
        paths: &[usize],
        weights: &Lane,
    ) {
        self.load_hermite(catalog, batch, paths, k);
        let up_to = catalog.cutoff(k);
        let mut acc = std::mem::take(&mut self.acc);
        if paths.len() == LANES {
            self.sweep(catalog, up_to, |a, v| {
                for l in 0..LANES {
                    acc[a][l] += weights[l] * v[l];
                }
            });
        } else {
            let n = paths.len();
            self.sweep(catalog, up_to, |a, v| {
                for l in 0..n {
                    acc[a][l] += weights[l] * v[l];
                }
            });
        }
        self.acc = acc;
    }

    /// Unnormalized sums `out[a] = sum_i w_i H_alpha(a)(G^(m_i))` over the
    /// `(path, weight)` items, for the indices measurable at `k`.
    pub fn accumulate<I>(
        &mut self,
        catalog: &BasisCatalog,
        batch: &PathBatch,
        k: usize,
        items: I,
        out: &mut [f64],
    ) where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let up_to = catalog.cutoff(k);
        debug_assert_eq!(out.len(), up_to);
        if self.acc.len() < up_to {
            self.acc.resize(up_to, [0.0; LANES]);
        }
        for lane in &mut self.acc[..up_to] {
            *lane = [0.0; LANES];
        }

        let mut paths = [0usize; LANES];
        let mut weights = [0.0; LANES];
        let mut filled = 0;
        for (m, w) in items {
            paths[filled] = m;
            weights[filled] = w;
            filled += 1;
            if filled == LANES {
                self.accumulate_group(catalog, batch, k, &paths, &weights);
                filled = 0;
            }
        }
        if filled > 0 {
            self.accumulate_group(catalog, batch, k, &paths[..filled], &weights);
        }

        for (o, acc) in out.iter_mut().zip(&self.acc[..up_to]) {
            let mut s = acc[0];
            for v in &acc[1..] {
                s += *v;
            }
            *o = s;
        }
    }

    /// Calls `sink(m, C(m))` with the expansion `sum_a coeffs[a] H_alpha(a)`
    /// evaluated on each path `m`, where `coeffs.len() == cutoff(k)`.
    pub fn evaluate<I, F>(
        &mut self,
        catalog: &BasisCatalog,
        batch: &PathBatch,
        k: usize,
        coeffs: &[f64],
        paths: I,
        mut sink: F,
    ) where
        I: IntoIterator<Item = usize>,
        F: FnMut(usize, f64),
    {
        debug_assert_eq!(coeffs.len(), catalog.cutoff(k));
        let mut group = [0usize; LANES];
        let mut filled = 0;
        let mut flush = |ws: &mut Workspace, group: &[usize]| {
            ws.load_hermite(catalog, batch, group, k);
            let mut s = [0.0; LANES];
            ws.sweep(catalog, coeffs.len(), |a, v| {
                for l in 0..LANES {
                    s[l] += coeffs[a] * v[l];
                }
            });
            for (l, &m) in group.iter().enumerate() {
                sink(m, s[l]);
            }
        };
        for m in paths {
            group[filled] = m;
            filled += 1;
            if filled == LANES {
                flush(self, &group);
                filled = 0;
            }
        }
        if filled > 0 {
            flush(self, &group[..filled]);
        }
    }
}
