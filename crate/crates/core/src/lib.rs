//! Evolutionary generation of synthetic clustering benchmarks.
//!
//! Datasets are encoded as one Gaussian gene per cluster and evolved either
//! towards a target silhouette width (index mode) or towards a gap in
//! adjusted Rand index between two clustering algorithms (versus mode).
//! Constraints on cluster overlap and elongation are handled by stochastic
//! ranking.

pub mod analysis;
pub mod clusterers;
pub mod constraints;
pub mod engine;
pub mod error;
pub mod genetics;
pub mod model;
pub mod numerics;
pub mod objectives;
pub mod selection;

pub use engine::{run, run_with, Mode, Objective, RunConfig, RunResult};
pub use error::{Error, Result};
pub use model::{Gene, Individual, Partition};
pub use numerics::{Matrix, Rng};
