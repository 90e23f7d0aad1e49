//! Zeroth-order optimization with prior-guided perturbations.
//!
//! The crate provides seed-regenerated Gaussian perturbations, two-point
//! estimators (plain SPSA, guiding vector, greedy), the matching training
//! loops, a handful of synthetic test problems, Monte Carlo checks of the
//! alignment ratios, trace files and a command-line front end.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod theory;
pub mod trace;

pub use error::{Result, ZoError};
pub use estimators::{DirectionSource, FixedDirections, GaussianDirections, GuidingVector, LossOracle};
pub use optimizers::{run_training, OptimizerConfig, RunOptions, Variant};
pub use problems::{Minibatch, Objective, ProblemSpec};
pub use rng::{derive_seed, DerivedSeed, MasterSeed};
pub use trace::{RunSummary, TraceRow};
