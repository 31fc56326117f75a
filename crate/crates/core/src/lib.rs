//! Differentially private release of graph-node classifiers.
//!
//! A student GNN is trained on a public graph using pseudo-labels produced by
//! per-query teacher models. Each teacher sees only the K nearest private
//! nodes (by feature distance) drawn from a Poisson subsample of the private
//! graph, and its posterior is released through a Laplace-noised argmax. The
//! [`accountant`] module turns the subsampled Laplace mechanism into an
//! (ε, δ) guarantee through Rényi-DP composition.
//!
//! Module map:
//!
//! * [`accountant`]: RDP curves, subsampling amplification, composition and conversion.
//! * [`graph`]: immutable graphs, ℓ-hop neighborhoods, Poisson sampling, KNN selection.
//! * [`dataset`]: on-disk dataset directories.
//! * [`gnn`]: GraphSAGE and MLP classifiers with hand-written backprop and Adam.
//! * [`pipeline`]: the PrivGNN pipeline, PATE baselines and non-private baselines.
//! * [`harness`]: synthetic SBM graphs, sweeps and comparison tables.

pub mod accountant;
pub mod config;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod gnn;
pub mod graph;
pub mod harness;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
