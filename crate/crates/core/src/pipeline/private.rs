//! Access-tracked views of the private and public data.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use ndarray::ArrayView1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{self, Graph, KnnSelection, Metric, NodeSet, Subgraph};

/// Number of private feature rows, labels and adjacency lists read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccessCounts {
    pub feature_rows: u64,
    pub labels: u64,
    pub adjacency: u64,
}

impl AccessCounts {
    pub fn total(&self) -> u64 {
        self.feature_rows + self.labels + self.adjacency
    }
}

#[derive(Debug, Default)]
struct Counters {
    feature_rows: AtomicU64,
    labels: AtomicU64,
    adjacency: AtomicU64,
}

impl Counters {
    fn add(&self, features: usize, labels: usize, adjacency: usize) {
        self.feature_rows.fetch_add(features as u64, Ordering::Relaxed);
        self.labels.fetch_add(labels as u64, Ordering::Relaxed);
        self.adjacency.fetch_add(adjacency as u64, Ordering::Relaxed);
    }

    fn snapshot(&self) -> AccessCounts {
        AccessCounts {
            feature_rows: self.feature_rows.load(Ordering::Relaxed),
            labels: self.labels.load(Ordering::Relaxed),
            adjacency: self.adjacency.load(Ordering::Relaxed),
        }
    }

    fn reset(&self) {
        self.feature_rows.store(0, Ordering::Relaxed);
        self.labels.store(0, Ordering::Relaxed);
        self.adjacency.store(0, Ordering::Relaxed);
    }
}

/// Private node ids touched by one job.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessScope {
    pub feature_rows: Vec<usize>,
    pub labels: Vec<usize>,
}

impl AccessScope {
    pub fn label_set(&self) -> NodeSet {
        self.labels.iter().copied().collect()
    }
}

/// The private graph behind an accounting layer.
///
/// Every read of features, labels or adjacency goes through this type and is
/// counted. After [`PrivateGraph::seal`] further reads are counted separately
/// so that a pipeline can prove the student stage never touched private data.
#[derive(Debug)]
pub struct PrivateGraph {
    graph: Graph,
    total: Counters,
    after_seal: Counters,
    sealed: AtomicBool,
}

impl PrivateGraph {
    pub fn new(graph: Graph) -> Result<Self> {
        if graph.labels().is_none() {
            return Err(Error::Dataset("private graph has no labels".into()));
        }
        Ok(Self {
            graph,
            total: Counters::default(),
            after_seal: Counters::default(),
            sealed: AtomicBool::new(false),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> usize {
        self.graph.num_classes()
    }

    pub fn feature_dim(&self) -> usize {
        self.graph.feature_dim()
    }

    fn record(&self, features: usize, labels: usize, adjacency: usize) {
        self.total.add(features, labels, adjacency);
        if self.sealed.load(Ordering::Acquire) {
            self.after_seal.add(features, labels, adjacency);
        }
    }

    /// Clears counters and the seal before a new run.
    pub fn begin_run(&self) {
        self.total.reset();
        self.after_seal.reset();
        self.sealed.store(false, Ordering::Release);
    }

    pub fn seal(&self) {
        self.sealed.store(true, Ordering::Release);
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed.load(Ordering::Acquire)
    }

    pub fn accesses(&self) -> AccessCounts {
        self.total.snapshot()
    }

    pub fn accesses_after_seal(&self) -> AccessCounts {
        self.after_seal.snapshot()
    }

    /// Poisson subsample of the private node ids. Reads no node data.
    pub fn poisson_sample<R: Rng + ?Sized>(&self, gamma: f64, rng: &mut R) -> Result<NodeSet> {
        graph::poisson_sample(&self.graph, gamma, rng)
    }

    /// KNN retrieval among `candidates`; reads one feature row per candidate.
    pub fn knn_select(
        &self,
        query: ArrayView1<'_, f64>,
        candidates: &NodeSet,
        k: usize,
        metric: Metric,
        scope: &mut AccessScope,
    ) -> Result<KnnSelection> {
        let selection = graph::knn_select(query, candidates, &self.graph, k, metric)?;
        self.record(candidates.len(), 0, 0);
        scope.feature_rows.extend(candidates.iter());
        Ok(selection)
    }

    /// Induced subgraph with features, labels and edges of `nodes`.
    pub fn labelled_subgraph(&self, nodes: &NodeSet, scope: &mut AccessScope) -> Result<Subgraph> {
        let sub = graph::induced_subgraph(&self.graph, nodes)?;
        self.record(nodes.len(), nodes.len(), nodes.len());
        scope.feature_rows.extend(nodes.iter());
        scope.labels.extend(nodes.iter());
        Ok(sub)
    }

    /// Features and labels of `nodes` without any edges.
    pub fn feature_subgraph(&self, nodes: &NodeSet, scope: &mut AccessScope) -> Result<Subgraph> {
        let edgeless = self.graph.without_edges();
        let sub = graph::induced_subgraph(&edgeless, nodes)?;
        self.record(nodes.len(), nodes.len(), 0);
        scope.feature_rows.extend(nodes.iter());
        scope.labels.extend(nodes.iter());
        Ok(sub)
    }

    /// The whole private graph, for the non-private baseline.
    pub fn full(&self, scope: &mut AccessScope) -> &Graph {
        let n = self.graph.num_nodes();
        self.record(n, n, n);
        scope.feature_rows.extend(0..n);
        scope.labels.extend(0..n);
        &self.graph
    }
}

/// The public graph with labels stripped, plus the evaluation labels kept apart.
#[derive(Debug, Clone)]
pub struct PublicData {
    pub graph: Graph,
    pub train: NodeSet,
    pub test: NodeSet,
    train_labels: Option<Vec<usize>>,
    test_labels: Option<Vec<usize>>,
}

impl PublicData {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let pick = |set: &NodeSet| -> Option<Vec<usize>> { set.iter().map(|v| dataset.public.label(v)).collect() };
        Self {
            graph: dataset.public.without_labels(),
            train: dataset.public_train.clone(),
            test: dataset.public_test.clone(),
            train_labels: pick(&dataset.public_train),
            test_labels: pick(&dataset.public_test),
        }
    }

    /// Ground-truth labels of the public train nodes, used only by the public-only baseline.
    pub fn train_labels(&self) -> Result<&[usize]> {
        self.train_labels
            .as_deref()
            .ok_or_else(|| Error::Dataset("public train nodes are not labelled".into()))
    }

    pub fn test_labels(&self) -> Result<&[usize]> {
        self.test_labels
            .as_deref()
            .ok_or_else(|| Error::Dataset("public test nodes are not labelled".into()))
    }
}
