//! Reproducible random walks on the outer automorphism group.
//!
//! A step distribution has finite support of certified automorphisms;
//! the walk multiplies independent draws on the right. Experiments
//! analyze the location (and optionally its inverse) at fixed
//! checkpoint times and aggregate classification statistics, with
//! per-trial rng streams so results are independent of scheduling.

mod distribution;
mod experiment;
mod walk;

pub use distribution::{DistributionError, StepDistribution, MASS_TOL};
pub use experiment::{
    aggregate_records, analyze_checkpoint, run_experiment, CheckpointAggregate, CheckpointRecord,
    ExperimentError, ExperimentReport, RecordOutcome, WalkConfig,
};
pub use walk::sample_walk;
