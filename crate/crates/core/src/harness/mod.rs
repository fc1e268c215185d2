//! Experiment orchestration: configuration, the learner, data collection,
//! metrics and the training loop.

pub mod agent;
pub mod config;
pub mod metrics;
pub mod rollout;
pub mod run;

pub use agent::{Agent, AgentOptions, LearnReport};
pub use config::{ExperimentConfig, Scenario, Variant};
pub use metrics::{compute_metrics, BatchMetrics, DropoutWindow, MetricsRow, MetricsWriter};
pub use rollout::{EvalSummary, Rollout};
pub use run::{evaluate_policy, run_experiment, stream_rng, RunSummary, Stream};
