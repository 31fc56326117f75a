//! End-to-end pipelines: PrivGNN, PATE-G/PATE-M and the non-private baselines.

pub mod baselines;
pub mod noise;
pub mod pate;
pub mod private;
pub mod privgnn;
pub mod report;

pub use baselines::{baseline_b1, baseline_b2, run_baseline, Baseline, BaselineOutcome};
pub use noise::{noisy_argmax, noisy_pseudo_label, noisy_vote_label, sample_laplace};
pub use pate::{pate_run, random_partition, PateConfig, PateOutcome};
pub use private::{AccessCounts, AccessScope, PrivateGraph, PublicData};
pub use privgnn::{
    privgnn_run, select_queries, train_student, PrivGnnConfig, PrivGnnOutcome, QueryOutcome, RunOptions,
};
pub use report::{config_hash, ExperimentReport, TABLE_HEADER};
