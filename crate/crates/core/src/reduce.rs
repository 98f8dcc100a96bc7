//! Deterministic summation structure shared by the sequential and parallel
//! engines.
//!
//! With [`Granularity::Fixed`] the paths are split into a power-of-two number
//! of leaves whose ranges depend only on the path count. Leaf sums are
//! combined along a fixed binary tree, so any worker count whose blocks are
//! unions of leaves yields bitwise identical totals. [`Granularity::PerWorker`]
//! instead sums each worker block in one pass and adds block partials in block
//! order; totals then depend on the worker count.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};

pub const DEFAULT_LEAVES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Fixed { leaves: usize },
    PerWorker,
}

impl Default for Granularity {
    fn default() -> Self {
        Granularity::Fixed {
            leaves: DEFAULT_LEAVES,
        }
    }
}

impl Granularity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Granularity::Fixed { leaves } if leaves == 0 || !leaves.is_power_of_two() => {
                Err(Error::InvalidLeafCount(leaves))
            }
            _ => Ok(()),
        }
    }
}

/// Path range of leaf `i` out of `leaves`.
pub fn leaf_range(paths: usize, leaves: usize, i: usize) -> Range<usize> {
    let lo = (paths as u128 * i as u128 / leaves as u128) as usize;
    let hi = (paths as u128 * (i + 1) as u128 / leaves as u128) as usize;
    lo..hi
}

/// A node of the summation tree: level 0 nodes are leaves, node `(l, i)`
/// covers leaves `i * 2^l .. (i + 1) * 2^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub level: u32,
    pub index: usize,
    pub sums: Vec<f64>,
}

/// Maximal aligned tree nodes covering leaves `lo..hi`, left to right.
pub fn dyadic_cover(mut lo: usize, hi: usize) -> Vec<(u32, usize)> {
    let mut out = Vec::new();
    while lo < hi {
        let mut level = if lo == 0 {
            usize::BITS - 1
        } else {
            lo.trailing_zeros()
        };
        while level > 0 && lo + (1usize << level) > hi {
            level -= 1;
        }
        out.push((level, lo >> level));
        lo += 1 << level;
    }
    out
}

pub(crate) fn add_into(acc: &mut [f64], other: &[f64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += *b;
    }
}

/// Sum of tree node `(level, index)` with leaf sums supplied by `leaf`.
pub fn node_sum<F>(level: u32, index: usize, leaf: &mut F) -> Vec<f64>
where
    F: FnMut(usize) -> Vec<f64>,
{
    if level == 0 {
        return leaf(index);
    }
    let mut left = node_sum(level - 1, 2 * index, leaf);
    let right = node_sum(level - 1, 2 * index + 1, leaf);
    add_into(&mut left, &right);
    left
}

/// Combines pieces that together cover all `leaves` leaves into the root sum.
pub fn assemble(pieces: Vec<TreeNode>, leaves: usize) -> Vec<f64> {
    let mut map: HashMap<(u32, usize), Vec<f64>> = pieces
        .into_iter()
        .map(|p| ((p.level, p.index), p.sums))
        .collect();
    fn take(level: u32, index: usize, map: &mut HashMap<(u32, usize), Vec<f64>>) -> Vec<f64> {
        if let Some(v) = map.remove(&(level, index)) {
            return v;
        }
        assert!(level > 0, "summation tree is missing leaf {index}");
        let mut left = take(level - 1, 2 * index, map);
        let right = take(level - 1, 2 * index + 1, map);
        add_into(&mut left, &right);
        left
    }
    take(leaves.trailing_zeros(), 0, &mut map)
}
