//! Path-parallel backward induction.
//!
//! Each worker owns a contiguous block of paths. At every exercise date the
//! workers compute unnormalized partial sums of `Z_tau H_alpha(G)` over their
//! block, the partials are reduced to one coefficient vector (normalized once
//! by `M alpha!`), the vector is broadcast, and every worker updates the
//! stopping policy of its own paths. Only coefficient vectors cross worker
//! boundaries.

use std::io::Write;
use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use crate::basis::BasisCatalog;
use crate::error::{Error, Result};
use crate::kernel::Workspace;
use crate::pool::WorkerPool;
use crate::pricer::{simulate_batch, ExerciseRule, PricingRequest, StoppingState};
use crate::reduce::{self, Granularity, TreeNode};
use crate::regression::{normalize, ChaosCoefficients, PathBatch};

/// Partition of the paths among workers.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerPlan {
    pub workers: usize,
    pub paths: usize,
    pub granularity: Granularity,
    pub blocks: Vec<Range<usize>>,
    /// Leaves owned by each worker under [`Granularity::Fixed`].
    pub leaf_spans: Vec<Range<usize>>,
}

impl WorkerPlan {
    pub fn new(paths: usize, workers: usize, granularity: Granularity) -> Result<Self> {
        granularity.validate()?;
        if workers == 0 || workers > paths {
            return Err(Error::InvalidWorkerCount { workers, paths });
        }
        let (blocks, leaf_spans) = match granularity {
            Granularity::Fixed { leaves } => {
                if workers > leaves {
                    return Err(Error::TooManyWorkers { workers, leaves });
                }
                let spans: Vec<Range<usize>> = (0..workers)
                    .map(|r| r * leaves / workers..(r + 1) * leaves / workers)
                    .collect();
                let blocks = spans
                    .iter()
                    .map(|s| {
                        reduce::leaf_range(paths, leaves, s.start).start
                            ..reduce::leaf_range(paths, leaves, s.end - 1).end
                    })
                    .collect();
                (blocks, spans)
            }
            Granularity::PerWorker => {
                let per = paths / workers;
                let blocks = (0..workers)
                    .map(|r| {
                        r * per..if r + 1 == workers {
                            paths
                        } else {
                            (r + 1) * per
                        }
                    })
                    .collect();
                (blocks, Vec::new())
            }
        };
        Ok(WorkerPlan {
            workers,
            paths,
            granularity,
            blocks,
            leaf_spans,
        })
    }

    /// Workers' partials are combined in this order.
    pub fn reduction_order(&self) -> Range<usize> {
        0..self.workers
    }
}

/// Reduce and broadcast primitives. The in-process implementation is
/// [`SharedMemory`]; a message-passing transport implements the same two
/// operations.
pub trait Collective: Sync {
    /// Combines every worker's pieces into the unnormalized total.
    fn reduce(&self, plan: &WorkerPlan, pieces: Vec<Vec<TreeNode>>) -> Vec<f64>;
    /// Publishes the coefficient vector to all workers.
    fn broadcast(&self, values: Vec<f64>) -> Arc<[f64]>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SharedMemory;

impl Collective for SharedMemory {
    fn reduce(&self, plan: &WorkerPlan, pieces: Vec<Vec<TreeNode>>) -> Vec<f64> {
        match plan.granularity {
            Granularity::Fixed { leaves } => {
                reduce::assemble(pieces.into_iter().flatten().collect(), leaves)
            }
            Granularity::PerWorker => {
                let mut parts = pieces.into_iter().flatten();
                let mut acc = parts.next().expect("at least one worker").sums;
                for p in parts {
                    reduce::add_into(&mut acc, &p.sums);
                }
                acc
            }
        }
    }

    fn broadcast(&self, values: Vec<f64>) -> Arc<[f64]> {
        values.into()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimings {
    pub local: Vec<f64>,
    pub reduce: f64,
    pub broadcast: f64,
    pub update: Vec<f64>,
}

/// What happened at one exercise date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionRecord {
    pub date: usize,
    pub cutoff: usize,
    /// Reals each worker contributed to the reduction.
    pub reals_sent: Vec<usize>,
    pub reals_broadcast: usize,
    /// Per-worker pieces, kept only when requested.
    pub partials: Option<Vec<Vec<TreeNode>>>,
    /// Unnormalized reduced sums.
    pub combined: Vec<f64>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InductionConfig {
    pub rule: ExerciseRule,
    pub granularity: Granularity,
    pub record_partials: bool,
}

#[derive(Debug, Clone)]
pub struct Induction {
    pub state: StoppingState,
    /// Coefficients per exercise date index; `None` where no regression ran.
    pub coefficients: Vec<Option<ChaosCoefficients>>,
    pub records: Vec<ReductionRecord>,
    /// `(1/M) sum_m Z^(m)_{tau_1}`
    pub continuation: f64,
    pub plan: WorkerPlan,
}

struct Block {
    range: Range<usize>,
    leaves: Range<usize>,
    tau: Vec<u32>,
    cashflow: Vec<f64>,
    ws: Workspace,
}

impl Block {
    fn local_sums(&mut self, worker: usize, ctx: &Ctx, k: usize) -> Vec<TreeNode> {
        let Block {
            range,
            leaves,
            cashflow,
            ws,
            ..
        } = self;
        let offset = range.start;
        let s = ctx.batch.grid_index(k);
        let up_to = ctx.catalog.cutoff(s);
        let mask = ctx.rule.masks_coefficients();
        let batch = ctx.batch;
        let cashflow: &[f64] = cashflow;
        let items = |r: Range<usize>| {
            r.filter_map(move |m| {
                let w = cashflow[m - offset];
                let keep = !mask || batch.payoff(m, k) > 0.0;
                (keep && w != 0.0).then_some((m, w))
            })
        };
        match ctx.plan.granularity {
            Granularity::Fixed { leaves: total } => {
                let mut leaf = |i: usize| {
                    let mut out = vec![0.0; up_to];
                    let r = reduce::leaf_range(ctx.plan.paths, total, i);
                    ws.accumulate(ctx.catalog, batch, s, items(r), &mut out);
                    out
                };
                reduce::dyadic_cover(leaves.start, leaves.end)
                    .into_iter()
                    .map(|(level, index)| TreeNode {
                        level,
                        index,
                        sums: reduce::node_sum(level, index, &mut leaf),
                    })
                    .collect()
            }
            Granularity::PerWorker => {
                let mut out = vec![0.0; up_to];
                ws.accumulate(ctx.catalog, batch, s, items(range.clone()), &mut out);
                vec![TreeNode {
                    level: 0,
                    index: worker,
                    sums: out,
                }]
            }
        }
    }

    fn update(&mut self, ctx: &Ctx, k: usize, coeffs: &[f64]) {
        let Block {
            range,
            tau,
            cashflow,
            ws,
            ..
        } = self;
        let offset = range.start;
        let batch = ctx.batch;
        let s = batch.grid_index(k);
        let rule = ctx.rule;
        if rule == ExerciseRule::InTheMoneyUnion {
            for m in range.clone() {
                let z = batch.payoff(m, k);
                if z > 0.0 {
                    tau[m - offset] = k as u32;
                    cashflow[m - offset] = z;
                }
            }
        }
        let candidates = range.clone().filter(|&m| {
            let z = batch.payoff(m, k);
            match rule {
                ExerciseRule::Standard => true,
                ExerciseRule::InTheMoney => z > 0.0,
                ExerciseRule::InTheMoneyUnion => z.is_nan() || z <= 0.0,
            }
        });
        ws.evaluate(ctx.catalog, batch, s, coeffs, candidates, |m, c| {
            let z = batch.payoff(m, k);
            if z >= c {
                tau[m - offset] = k as u32;
                cashflow[m - offset] = z;
            }
        });
    }
}

struct Ctx<'a> {
    catalog: &'a BasisCatalog,
    batch: &'a PathBatch,
    plan: &'a WorkerPlan,
    rule: ExerciseRule,
}

pub fn run_parallel_induction(
    catalog: &BasisCatalog,
    batch: &PathBatch,
    config: &InductionConfig,
    pool: &WorkerPool,
) -> Result<Induction> {
    run_parallel_induction_with(catalog, batch, config, pool, &SharedMemory)
}

pub fn run_parallel_induction_with(
    catalog: &BasisCatalog,
    batch: &PathBatch,
    config: &InductionConfig,
    pool: &WorkerPool,
    collective: &dyn Collective,
) -> Result<Induction> {
    batch.check_catalog(catalog)?;
    let paths = batch.paths();
    let plan = WorkerPlan::new(paths, pool.workers(), config.granularity)?;
    let last = batch.last_date();
    if last >= 2 {
        let largest = catalog.cutoff(batch.grid_index(last - 1));
        if paths < largest {
            log::warn!("{paths} paths for {largest} chaos coefficients; estimates will be noisy");
        }
    }

    let mut blocks: Vec<Block> = plan
        .blocks
        .iter()
        .enumerate()
        .map(|(r, range)| Block {
            range: range.clone(),
            leaves: plan.leaf_spans.get(r).cloned().unwrap_or(0..0),
            tau: vec![last as u32; range.len()],
            cashflow: range.clone().map(|m| batch.payoff(m, last)).collect(),
            ws: Workspace::new(),
        })
        .collect();

    let ctx = Ctx {
        catalog,
        batch,
        plan: &plan,
        rule: config.rule,
    };
    let mut coefficients = vec![None; last + 1];
    let mut records = Vec::new();

    for k in (1..last).rev() {
        if !batch.is_exercisable(k) {
            continue;
        }
        let s = batch.grid_index(k);
        let local = pool.map_mut(&mut blocks, |r, b| {
            let t = Instant::now();
            let pieces = b.local_sums(r, &ctx, k);
            (pieces, t.elapsed().as_secs_f64())
        })?;
        let (pieces, local_secs): (Vec<Vec<TreeNode>>, Vec<f64>) = local.into_iter().unzip();
        let reals_sent = pieces
            .iter()
            .map(|p| p.iter().map(|n| n.sums.len()).sum())
            .collect();
        let kept = config.record_partials.then(|| pieces.clone());

        let t = Instant::now();
        let combined = collective.reduce(&plan, pieces);
        let coeffs = normalize(catalog, combined.clone(), paths, s);
        let reduce_secs = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let shared = collective.broadcast(coeffs.values.clone());
        let broadcast_secs = t.elapsed().as_secs_f64();

        let update_secs = pool.map_mut(&mut blocks, |_, b| {
            let t = Instant::now();
            b.update(&ctx, k, &shared);
            t.elapsed().as_secs_f64()
        })?;

        records.push(ReductionRecord {
            date: k,
            cutoff: shared.len(),
            reals_sent,
            reals_broadcast: shared.len(),
            partials: kept,
            combined,
            timings: PhaseTimings {
                local: local_secs,
                reduce: reduce_secs,
                broadcast: broadcast_secs,
                update: update_secs,
            },
        });
        coefficients[k] = Some(coeffs);
    }

    let mut tau = Vec::with_capacity(paths);
    let mut cashflow = Vec::with_capacity(paths);
    for b in blocks {
        tau.extend(b.tau);
        cashflow.extend(b.cashflow);
    }
    let total = sum_cashflows(&plan, &cashflow);
    Ok(Induction {
        state: StoppingState { tau, cashflow },
        coefficients,
        records,
        continuation: total / paths as f64,
        plan,
    })
}

/// Total of the cashflows with the same summation structure as the
/// coefficients.
fn sum_cashflows(plan: &WorkerPlan, cashflow: &[f64]) -> f64 {
    let left_to_right = |r: Range<usize>| {
        let mut s = 0.0;
        for x in &cashflow[r] {
            s += *x;
        }
        s
    };
    match plan.granularity {
        Granularity::Fixed { leaves } => reduce::node_sum(leaves.trailing_zeros(), 0, &mut |i| {
            vec![left_to_right(reduce::leaf_range(plan.paths, leaves, i))]
        })[0],
        Granularity::PerWorker => {
            let mut acc = left_to_right(plan.blocks[0].clone());
            for b in &plan.blocks[1..] {
                acc += left_to_right(b.clone());
            }
            acc
        }
    }
}

/// Timings of one worker count in a scalability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityRow {
    pub workers: usize,
    pub simulation_seconds: f64,
    pub induction_seconds: f64,
    /// `T_1 / (R T_R)` on simulation plus induction.
    pub efficiency: f64,
    /// `T_1 / (R T_R)` on the induction alone.
    pub induction_efficiency: f64,
    pub price: f64,
}

impl ScalabilityRow {
    pub fn wall_seconds(&self) -> f64 {
        self.simulation_seconds + self.induction_seconds
    }
}

/// Prices run `request.first_run` once per worker count and reports parallel
/// efficiencies relative to the single-worker timing.
pub fn measure_scalability(
    request: &PricingRequest,
    worker_counts: &[usize],
) -> Result<Vec<ScalabilityRow>> {
    if !worker_counts.contains(&1) {
        return Err(crate::error::invalid(
            "workers",
            "the sweep must include a single worker",
        ));
    }
    request.validate()?;
    let catalog = request.catalog()?;
    let config = InductionConfig {
        rule: request.rule,
        granularity: request.granularity,
        record_partials: false,
    };
    let mut timed = Vec::with_capacity(worker_counts.len());
    for &workers in worker_counts {
        let pool = WorkerPool::new(workers)?;
        let t = Instant::now();
        let (batch, _) = simulate_batch(request, request.first_run, &pool)?;
        let sim = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let induction = run_parallel_induction(&catalog, &batch, &config, &pool)?;
        let ind = t.elapsed().as_secs_f64();
        let price = batch.payoff(0, 0).max(induction.continuation);
        log::info!("{workers} workers: {sim:.2}s simulation, {ind:.2}s induction");
        timed.push((workers, sim, ind, price));
    }
    let &(_, sim1, ind1, _) = timed.iter().find(|t| t.0 == 1).expect("checked above");
    Ok(timed
        .into_iter()
        .map(|(workers, sim, ind, price)| ScalabilityRow {
            workers,
            simulation_seconds: sim,
            induction_seconds: ind,
            efficiency: (sim1 + ind1) / (workers as f64 * (sim + ind)),
            induction_efficiency: ind1 / (workers as f64 * ind),
            price,
        })
        .collect())
}

/// Writes `date_k,phase,worker,seconds` rows; reduce and broadcast rows use
/// `root` as the worker.
pub fn write_timings_csv<W: Write>(records: &[ReductionRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "date_k,phase,worker,seconds")?;
    for r in records {
        for (w, s) in r.timings.local.iter().enumerate() {
            writeln!(out, "{},local_sum,{},{:e}", r.date, w, s)?;
        }
        writeln!(out, "{},reduce,root,{:e}", r.date, r.timings.reduce)?;
        writeln!(out, "{},broadcast,root,{:e}", r.date, r.timings.broadcast)?;
        for (w, s) in r.timings.update.iter().enumerate() {
            writeln!(out, "{},policy_update,{},{:e}", r.date, w, s)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_blocks_cover_paths() {
        let plan = WorkerPlan::new(1003, 3, Granularity::PerWorker).unwrap();
        assert_eq!(plan.blocks, vec![0..334, 334..668, 668..1003]);
        let plan = WorkerPlan::new(1000, 4, Granularity::Fixed { leaves: 8 }).unwrap();
        assert_eq!(plan.leaf_spans, vec![0..2, 2..4, 4..6, 6..8]);
        assert_eq!(plan.blocks, vec![0..250, 250..500, 500..750, 750..1000]);
        assert_eq!(plan.reduction_order(), 0..4);
    }

    #[test]
    fn plan_errors() {
        assert!(matches!(
            WorkerPlan::new(4, 5, Granularity::PerWorker),
            Err(Error::InvalidWorkerCount { .. })
        ));
        assert!(matches!(
            WorkerPlan::new(100, 0, Granularity::PerWorker),
            Err(Error::InvalidWorkerCount { .. })
        ));
        assert!(matches!(
            WorkerPlan::new(100, 9, Granularity::Fixed { leaves: 8 }),
            Err(Error::TooManyWorkers { .. })
        ));
    }

    #[test]
    fn timings_csv_header() {
        let rec = ReductionRecord {
            date: 3,
            cutoff: 1,
            reals_sent: vec![1],
            reals_broadcast: 1,
            partials: None,
            combined: vec![0.0],
            timings: PhaseTimings {
                local: vec![0.5],
                reduce: 0.25,
                broadcast: 0.0,
                update: vec![1.0],
            },
        };
        let mut buf = Vec::new();
        write_timings_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "date_k,phase,worker,seconds");
        assert_eq!(lines[1], "3,local_sum,0,5e-1");
        assert_eq!(lines[2], "3,reduce,root,2.5e-1");
        assert_eq!(lines.len(), 5);
    }
}
