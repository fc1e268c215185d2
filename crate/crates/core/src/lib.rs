//! Energy-efficient downlink power scheduling for XR traffic with hard packet
//! deadlines.
//!
//! The crate is split into five layers:
//!
//! - [`env`]: the multi-user MIMO downlink simulator (geometry channels, RZF
//!   precoding, deadline-indexed packet queues, regime-switching traffic).
//! - [`nn`]: small feedforward approximators with exact reverse-mode
//!   gradients (Gaussian policy, dual-head Q/V critics, context encoder).
//! - [`crl`]: the constrained successive-convex-approximation policy
//!   optimizer (SAA estimators, average-reward TD critics, quadratic
//!   surrogates and their dual solvers).
//! - [`ci`]: context inference and potential-based cost reshaping.
//! - [`harness`]: the outer training loop, configuration, metrics and
//!   checkpoints.

pub mod batch;
pub mod ci;
pub mod crl;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;

pub use batch::{IterationBatch, ObservationTuple};
pub use error::{Error, Result};
pub use harness::config::{ExperimentConfig, Variant};
pub use harness::metrics::MetricsRow;
pub use harness::run::{evaluate_policy, run_experiment, RunSummary};
