//! Job execution with a rayon backend and a sequential fallback.
//!
//! Results are always returned in job-index order, so callers observe the
//! same output regardless of the executor or the submission order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::seed::StreamRng;

/// Which backend runs independent jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Executor {
    #[default]
    Parallel,
    Sequential,
}

impl Executor {
    /// Whether this build can actually run jobs in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Order in which jobs are submitted to the executor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "order", content = "seed")]
pub enum JobOrder {
    #[default]
    Forward,
    Reverse,
    Shuffled(u64),
}

impl JobOrder {
    pub fn permutation(self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        match self {
            JobOrder::Forward => {}
            JobOrder::Reverse => idx.reverse(),
            JobOrder::Shuffled(seed) => idx.shuffle(&mut StreamRng::seed_from_u64(seed)),
        }
        idx
    }
}

/// Runs `job(i)` for `i in 0..n` and returns results indexed by `i`.
pub fn run_indexed<T, F>(n: usize, executor: Executor, order: JobOrder, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let perm = order.permutation(n);
    let mut tagged: Vec<(usize, T)> = match executor {
        #[cfg(feature = "parallel")]
        Executor::Parallel => {
            use rayon::prelude::*;
            perm.into_par_iter().map(|i| (i, job(i))).collect()
        }
        _ => perm.into_iter().map(|i| (i, job(i))).collect(),
    };
    tagged.sort_unstable_by_key(|(i, _)| *i);
    tagged.into_iter().map(|(_, t)| t).collect()
}

/// Fallible variant of [`run_indexed`]; the error of the lowest failing index wins.
pub fn try_run_indexed<T, E, F>(n: usize, executor: Executor, order: JobOrder, job: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    run_indexed(n, executor, order, job).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_follow_index_order() {
        for executor in [Executor::Parallel, Executor::Sequential] {
            for order in [JobOrder::Forward, JobOrder::Reverse, JobOrder::Shuffled(9)] {
                let out = run_indexed(100, executor, order, |i| i * i);
                assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn lowest_failing_index_reported() {
        let r: Result<Vec<usize>, usize> = try_run_indexed(10, Executor::Parallel, JobOrder::Reverse, |i| {
            if i % 4 == 3 {
                Err(i)
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(3));
    }

    #[test]
    fn permutations_cover_all_jobs() {
        let mut p = JobOrder::Shuffled(3).permutation(50);
        p.sort();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }
}
