//! In-process worker pool.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A fixed number of workers. One worker runs on the calling thread.
pub struct WorkerPool {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool")
            .field("workers", &self.workers)
            .finish()
    }
}

impl WorkerPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(crate::error::invalid("workers", "need at least one worker"));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("chaos-worker-{i}"))
                    .build()
                    .map_err(|e| Error::Worker(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(WorkerPool { workers, pool })
    }

    pub fn sequential() -> Self {
        WorkerPool {
            workers: 1,
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `op` inside the pool so that nested rayon work uses its threads.
    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(op),
            None => op(),
        }
    }

    /// Applies `f` to every item, one task per item, and collects results in
    /// item order. A panicking task turns into [`Error::Worker`].
    pub fn map_mut<T, R, F>(&self, items: &mut [T], f: F) -> Result<Vec<R>>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync,
    {
        let run = || -> Vec<R> {
            match &self.pool {
                Some(p) => p.install(|| {
                    items
                        .par_iter_mut()
                        .with_max_len(1)
                        .enumerate()
                        .map(|(i, t)| f(i, t))
                        .collect()
                }),
                None => items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect(),
            }
        };
        catch_unwind(AssertUnwindSafe(run)).map_err(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "worker panicked".into());
            Error::Worker(msg)
        })
    }
}
