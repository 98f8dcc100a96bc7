//! Truncated Wiener chaos basis.
//!
//! A basis function is a product of probabilists' Hermite polynomials of the
//! normalized Brownian increments, `H_alpha(g) = prod_{i,j} H_{alpha_i^j}(g_i^j)`,
//! indexed by a multi-index `alpha` of total degree at most `p`. Increments are
//! flattened increment-major: position `f = (i - 1) * d + j` holds dimension
//! `j` of increment `i` (both zero-based in storage, increments one-based in
//! the public API).
//!
//! The catalog is ordered by last active increment, then total degree, then
//! descending lexicographic order of the flattened entries. The first
//! `cutoff(k)` entries are therefore exactly the indices measurable with
//! respect to the first `k` increments.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Highest supported chaos order. Factorials of indices stay exact in `u64`.
pub const MAX_ORDER: usize = 20;

/// Default cap on the number of catalog entries.
pub const DEFAULT_BASIS_BUDGET: usize = 4_000_000;

/// Probabilists' Hermite polynomial `H_degree(x)`, via
/// `H_{i+1}(x) = x H_i(x) - i H_{i-1}(x)`.
pub fn hermite(degree: usize, x: f64) -> f64 {
    match degree {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for i in 1..degree {
                let next = x * cur - i as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[i] = H_i(x)` for `i < out.len()`.
pub fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for i in 2..out.len() {
        out[i] = x * out[i - 1] - (i - 1) as f64 * out[i - 2];
    }
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

/// One multi-index, stored sparsely as `(flat position, degree)` pairs sorted
/// by position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    terms: Vec<(u32, u8)>,
    dims: u32,
    total_degree: u32,
    last_active: u32,
    factorial: u64,
}

impl MultiIndex {
    fn from_terms(terms: Vec<(u32, u8)>, dims: usize) -> Self {
        let total_degree = terms.iter().map(|&(_, e)| e as u32).sum();
        let last_active = terms.last().map_or(0, |&(f, _)| f / dims as u32 + 1);
        let factorial = terms.iter().map(|&(_, e)| factorial(e as u32)).product();
        MultiIndex {
            terms,
            dims: dims as u32,
            total_degree,
            last_active,
            factorial,
        }
    }

    /// Nonzero `(flat position, degree)` pairs in increasing position order.
    pub fn terms(&self) -> &[(u32, u8)] {
        &self.terms
    }

    pub fn total_degree(&self) -> u32 {
        self.total_degree
    }

    /// Largest one-based increment carrying a nonzero degree; 0 for the constant.
    pub fn last_active_increment(&self) -> usize {
        self.last_active as usize
    }

    /// `alpha! = prod alpha_i^j!`
    pub fn factorial(&self) -> u64 {
        self.factorial
    }

    /// Degree on one-based increment `increment` and zero-based dimension `dim`.
    pub fn degree(&self, increment: usize, dim: usize) -> u32 {
        let f = ((increment - 1) * self.dims as usize + dim) as u32;
        self.terms
            .iter()
            .find(|&&(p, _)| p == f)
            .map_or(0, |&(_, e)| e as u32)
    }

    /// Dense entries over `increments` increments, increment-major.
    pub fn dense(&self, increments: usize) -> Vec<u32> {
        let mut out = vec![0; increments * self.dims as usize];
        for &(f, e) in &self.terms {
            out[f as usize] = e as u32;
        }
        out
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// `true` iff the index only involves the first `k` increments.
    pub fn measurable_at(&self, k: usize) -> bool {
        self.last_active_increment() <= k
    }

    /// Evaluates `H_alpha(g)` directly from the factors.
    pub fn eval(&self, g: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(f, e)| hermite(e as usize, g[f as usize]))
            .product()
    }
}

// Descending lexicographic order of the dense entries, computed on the
// sparse form: the earliest position where the two differ decides, and the
// larger entry there sorts first.
fn lex_desc(a: &[(u32, u8)], b: &[(u32, u8)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.0.cmp(&y.0) {
            Ordering::Less => return Ordering::Less,
            Ordering::Greater => return Ordering::Greater,
            Ordering::Equal => match y.1.cmp(&x.1) {
                Ordering::Equal => {}
                o => return o,
            },
        }
    }
    b.len().cmp(&a.len())
}

/// The enumerated index set `{alpha in (N^n)^d : |alpha|_1 <= p}` together
/// with its measurability cutoffs and an evaluation plan.
///
/// The plan expresses each basis value as `value[parent[a]] * H_e(g_f)`: the
/// parent is the index with its highest-position factor removed, which always
/// precedes it in the catalog.
#[derive(Debug, Clone)]
pub struct BasisCatalog {
    order: usize,
    increments: usize,
    dims: usize,
    indices: Vec<MultiIndex>,
    cutoffs: Vec<usize>,
    parent: Vec<u32>,
    slot: Vec<u32>,
}

/// Identity of a catalog, carried by coefficient vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CatalogShape {
    pub order: usize,
    pub increments: usize,
    pub dims: usize,
}

impl BasisCatalog {
    pub fn enumerate(order: usize, increments: usize, dims: usize) -> Result<Self> {
        Self::with_budget(order, increments, dims, DEFAULT_BASIS_BUDGET)
    }

    pub fn with_budget(
        order: usize,
        increments: usize,
        dims: usize,
        budget: usize,
    ) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooLarge {
                order,
                max: MAX_ORDER,
            });
        }
        if increments == 0 || dims == 0 {
            return Err(Error::EmptyBasis { increments, dims });
        }
        let positions = increments * dims;
        let cardinality = binomial((positions + order) as u64, order as u64).unwrap_or(u128::MAX);
        if cardinality > budget as u128 {
            return Err(Error::BasisBudgetExceeded {
                cardinality,
                budget,
            });
        }

        let mut raw: Vec<Vec<(u32, u8)>> = Vec::with_capacity(cardinality as usize);
        let mut current = Vec::with_capacity(order);
        enumerate_terms(0, positions as u32, order as u32, &mut current, &mut raw);

        let mut indices: Vec<MultiIndex> = raw
            .into_iter()
            .map(|t| MultiIndex::from_terms(t, dims))
            .collect();
        indices.sort_by(|a, b| {
            a.last_active
                .cmp(&b.last_active)
                .then(a.total_degree.cmp(&b.total_degree))
                .then_with(|| lex_desc(&a.terms, &b.terms))
        });

        let mut cutoffs = vec![0usize; increments + 1];
        for ix in &indices {
            cutoffs[ix.last_active_increment()] += 1;
        }
        for k in 1..=increments {
            cutoffs[k] += cutoffs[k - 1];
        }

        let lookup: HashMap<&[(u32, u8)], u32> = indices
            .iter()
            .enumerate()
            .map(|(a, ix)| (ix.terms.as_slice(), a as u32))
            .collect();
        let stride = (order + 1) as u32;
        let mut parent = vec![0u32; indices.len()];
        let mut slot = vec![0u32; indices.len()];
        for (a, ix) in indices.iter().enumerate().skip(1) {
            let (&(f, e), rest) = ix.terms.split_last().expect("only index 0 is constant");
            parent[a] = lookup[rest];
            slot[a] = f * stride + e as u32;
            debug_assert!((parent[a] as usize) < a);
        }

        Ok(BasisCatalog {
            order,
            increments,
            dims,
            indices,
            cutoffs,
            parent,
            slot,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn increments(&self) -> usize {
        self.increments
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn shape(&self) -> CatalogShape {
        CatalogShape {
            order: self.order,
            increments: self.increments,
            dims: self.dims,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Number of indices measurable with respect to the first `k` increments.
    pub fn cutoff(&self, k: usize) -> usize {
        self.cutoffs[k.min(self.increments)]
    }

    /// Position of an index given by its dense entries, if present.
    pub fn position(&self, dense: &[u32]) -> Option<usize> {
        if dense.len() != self.increments * self.dims {
            return None;
        }
        let terms: Vec<(u32, u8)> = dense
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(f, &e)| (f as u32, e as u8))
            .collect();
        self.indices.iter().position(|ix| ix.terms == terms)
    }

    pub(crate) fn plan(&self) -> (&[u32], &[u32]) {
        (&self.parent, &self.slot)
    }

    /// Values `H_alpha(g)` of the first `up_to` indices on one increment
    /// vector `g` of length `n * d`.
    pub fn eval_row(&self, g: &[f64], up_to: usize) -> Result<Vec<f64>> {
        let positions = self.increments * self.dims;
        if g.len() != positions {
            return Err(Error::DimensionMismatch {
                what: "increment vector length",
                expected: positions,
                actual: g.len(),
            });
        }
        if up_to > self.len() {
            return Err(Error::DimensionMismatch {
                what: "basis prefix length",
                expected: self.len(),
                actual: up_to,
            });
        }
        let stride = self.order + 1;
        let mut table = vec![0.0; positions * stride];
        for (f, &x) in g.iter().enumerate() {
            hermite_all(x, &mut table[f * stride..(f + 1) * stride]);
        }
        let mut out = vec![0.0; up_to];
        if up_to > 0 {
            out[0] = 1.0;
        }
        for a in 1..up_to {
            out[a] = out[self.parent[a] as usize] * table[self.slot[a] as usize];
        }
        Ok(out)
    }
}

fn enumerate_terms(
    start: u32,
    positions: u32,
    remaining: u32,
    current: &mut Vec<(u32, u8)>,
    out: &mut Vec<Vec<(u32, u8)>>,
) {
    out.push(current.clone());
    if remaining == 0 {
        return;
    }
    for f in start..positions {
        for e in 1..=remaining {
            current.push((f, e as u8));
            enumerate_terms(f + 1, positions, remaining - e, current, out);
            current.pop();
        }
    }
}
