//! Grid sweeps over (λ, γ, K, |Q|, δ).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accountant::{privgnn_budget_with, PrivacyParams};
use crate::config::{check_version, DatasetSource};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::{run_indexed, Executor, JobOrder};
use crate::pipeline::{privgnn_run, PrivGnnConfig, PrivateGraph, PublicData, RunOptions};

/// Axis values; an empty axis keeps the base config's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axes {
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub k_neighbors: Vec<usize>,
    pub query_count: Vec<u64>,
    pub delta: Vec<f64>,
}

/// A sweep file.
///
/// ```toml
/// version = 1
/// seeds = [0, 1, 2]
/// budget_only = false     # skip training, account budgets only
/// parallel_cells = false  # run cells concurrently instead of query jobs
///
/// [dataset]               # required unless budget_only
/// seed = 0
/// [dataset.synthetic]
///
/// [base]                  # a [privgnn] table, see the run config
/// k_neighbors = 100
///
/// [axes]
/// lambda = [0.1, 0.2, 0.4, 0.8, 1.0]
/// gamma = [0.3]
/// query_count = [500, 1000]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub version: u32,
    #[serde(default)]
    pub dataset: Option<DatasetSource>,
    #[serde(default)]
    pub base: PrivGnnConfig,
    #[serde(default)]
    pub axes: Axes,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budget_only: bool,
    #[serde(default)]
    pub parallel_cells: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text)?;
        check_version(spec.version)?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Every combination of the axes; λ varies fastest, then K, |Q|, γ and δ.
    pub fn cells(&self) -> Result<Vec<SweepCell>> {
        if self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let p = &self.base.privacy;
        let lambdas = or(&self.axes.lambda, p.lambda);
        let gammas = or(&self.axes.gamma, p.gamma);
        let deltas = or(&self.axes.delta, p.delta);
        let ks = if self.axes.k_neighbors.is_empty() {
            vec![self.base.k_neighbors]
        } else {
            self.axes.k_neighbors.clone()
        };
        let qs = if self.axes.query_count.is_empty() {
            vec![p.num_queries]
        } else {
            self.axes.query_count.clone()
        };
        let mut cells = Vec::new();
        for &delta in &deltas {
            for &gamma in &gammas {
                for &query_count in &qs {
                    for &k_neighbors in &ks {
                        for &lambda in &lambdas {
                            cells.push(SweepCell {
                                lambda,
                                gamma,
                                k_neighbors,
                                query_count,
                                delta,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda: f64,
    pub gamma: f64,
    pub k_neighbors: usize,
    pub query_count: u64,
    pub delta: f64,
}

impl SweepCell {
    pub fn privacy(&self) -> PrivacyParams {
        PrivacyParams {
            gamma: self.gamma,
            lambda: self.lambda,
            num_queries: self.query_count,
            delta: self.delta,
        }
    }

    pub fn apply(&self, base: &PrivGnnConfig, seed: u64) -> PrivGnnConfig {
        PrivGnnConfig {
            privacy: self.privacy(),
            k_neighbors: self.k_neighbors,
            master_seed: seed,
            ..base.clone()
        }
    }
}

/// One CSV row per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub gamma: f64,
    pub k_neighbors: usize,
    pub query_count: u64,
    pub delta: f64,
    pub num_seeds: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub epsilon: Option<f64>,
    pub optimal_alpha: Option<u32>,
    pub crude_epsilon: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(cell: &SweepCell, num_seeds: usize) -> Self {
        Self {
            lambda: cell.lambda,
            gamma: cell.gamma,
            k_neighbors: cell.k_neighbors,
            query_count: cell.query_count,
            delta: cell.delta,
            num_seeds,
            accuracy_mean: None,
            accuracy_std: None,
            epsilon: None,
            optimal_alpha: None,
            crude_epsilon: None,
            error: None,
        }
    }

    pub fn cell(&self) -> SweepCell {
        SweepCell {
            lambda: self.lambda,
            gamma: self.gamma,
            k_neighbors: self.k_neighbors,
            query_count: self.query_count,
            delta: self.delta,
        }
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_cell(
    spec: &SweepSpec,
    cell: &SweepCell,
    data: Option<&(Dataset, PublicData)>,
    executor: Executor,
) -> Result<SweepRow> {
    let mut row = SweepRow::empty(cell, spec.seeds.len());
    let budget = privgnn_budget_with(&cell.privacy(), &spec.base.accountant)?;
    if !spec.base.noiseless {
        row.epsilon = Some(budget.tight.epsilon);
        row.optimal_alpha = Some(budget.tight.optimal_order);
        row.crude_epsilon = Some(budget.crude);
    }
    if spec.budget_only {
        return Ok(row);
    }
    let (dataset, public) = data.ok_or_else(|| Error::Config("sweep needs a dataset unless budget_only".into()))?;
    let private = PrivateGraph::new(dataset.private.clone())?;
    let options = RunOptions {
        executor,
        order: JobOrder::Forward,
    };
    let mut accuracies = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let config = cell.apply(&spec.base, seed);
        let outcome = privgnn_run(&private, public, &config, options)?;
        if outcome.report.epsilon != row.epsilon {
            return Err(Error::Config("budget changed across seeds".into()));
        }
        accuracies.push(outcome.report.accuracy);
    }
    let (mean, std) = mean_std(&accuracies);
    row.accuracy_mean = Some(mean);
    row.accuracy_std = Some(std);
    Ok(row)
}

/// Runs every cell; a failing cell yields a row with only its error filled in.
pub fn run_sweep(spec: &SweepSpec, dataset: Option<&Dataset>, executor: Executor) -> Result<Vec<SweepRow>> {
    let cells = spec.cells()?;
    let data = dataset.map(|d| (d.clone(), PublicData::from_dataset(d)));
    let (outer, inner) = if spec.parallel_cells {
        (executor, Executor::Sequential)
    } else {
        (Executor::Sequential, executor)
    };
    let rows = run_indexed(cells.len(), outer, JobOrder::Forward, |i| {
        run_cell(spec, &cells[i], data.as_ref(), inner).unwrap_or_else(|e| {
            log::warn!("sweep cell {i} failed: {e}");
            SweepRow {
                error: Some(e.to_string()),
                ..SweepRow::empty(&cells[i], spec.seeds.len())
            }
        })
    });
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
