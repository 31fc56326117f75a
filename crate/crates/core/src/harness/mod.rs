//! Synthetic datasets, parameter sweeps and comparison tables.

pub mod compare;
pub mod sbm;
pub mod sweep;

pub use compare::{
    compare_to_reference, compare_with_accountant, reference_budgets, write_comparison_csv, Comparison, ComparisonRow,
    ReferenceBudget,
};
pub use sbm::{generate_sbm, sample_sbm, SbmGraph, SbmSpec};
pub use sweep::{mean_std, read_sweep_csv, run_sweep, write_sweep_csv, Axes, SweepCell, SweepRow, SweepSpec};
