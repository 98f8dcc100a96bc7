//! Bermudan option pricing by policy iteration, with conditional
//! expectations taken from truncated Wiener chaos expansions whose
//! coefficients are plain Monte Carlo means.
//!
//! The pipeline is: simulate Brownian increments and asset paths
//! ([`models`]), compute discounted payoffs ([`payoffs`]), then run the
//! backward induction ([`parallel`], [`pricer`]) over the chaos basis
//! ([`basis`]) with coefficients from [`regression`].

pub mod basis;
pub mod error;
mod kernel;
pub mod ls;
pub mod models;
pub mod parallel;
pub mod payoffs;
pub mod pool;
pub mod pricer;
pub mod reduce;
pub mod regression;
pub mod rng;
pub mod stats;

pub use basis::{hermite, BasisCatalog, CatalogShape, MultiIndex};
pub use error::{Error, Result};
pub use models::{AssetPaths, BlackScholes, Heston, Model, SimulatedPaths, TimeGrid};
pub use parallel::{
    measure_scalability, run_parallel_induction, Collective, Induction, InductionConfig,
    ReductionRecord, ScalabilityRow, SharedMemory, WorkerPlan,
};
pub use payoffs::{compute_payoff_matrix, PayoffMatrix, PayoffSpec};
pub use pool::WorkerPool;
pub use pricer::{
    backward_induction, price_bermudan, ExerciseRule, PricingRequest, PricingResult, RunOutcome,
    StoppingState,
};
pub use reduce::Granularity;
pub use regression::{
    conditional_expectation, estimate_coefficients, ChaosCoefficients, PathBatch,
};
