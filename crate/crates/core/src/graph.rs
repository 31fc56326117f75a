//! Immutable undirected graphs with dense node features.
//!
//! Also hosts the node-selection primitives of the private data selection
//! phase: Poisson sampling, K-nearest-neighbor retrieval and induced
//! subgraphs, plus ℓ-hop neighborhoods for inductive inference.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a graph holds private (teacher-side) or public (student-side) data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Private,
    Public,
}

/// Undirected graph in CSR form. Neighbor lists are sorted, deduplicated and
/// free of self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
    role: Role,
}

impl Graph {
    /// Builds a graph, symmetrising edges and dropping self-loops and duplicates.
    pub fn new<I>(
        num_nodes: usize,
        edges: I,
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
        num_classes: usize,
        role: Role,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if features.nrows() != num_nodes {
            return Err(Error::Dimension(format!(
                "feature matrix has {} rows for {} nodes",
                features.nrows(),
                num_nodes
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != num_nodes {
                return Err(Error::Dimension(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    num_nodes
                )));
            }
            if let Some((v, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
                return Err(Error::Dataset(format!(
                    "node {v} has label {y} but there are {num_classes} classes"
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::InvalidNode { node, num_nodes });
                }
            }
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adjacency {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        Ok(Self {
            offsets,
            neighbors,
            features,
            labels,
            num_classes,
            role,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_row(&self, v: usize) -> ArrayView1<'_, f64> {
        self.features.row(v)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels.as_ref().map(|l| l[v])
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.num_nodes() {
            return Err(Error::InvalidNode {
                node: v,
                num_nodes: self.num_nodes(),
            });
        }
        Ok(())
    }

    /// Same nodes and features with all edges removed.
    pub fn without_edges(&self) -> Graph {
        Graph {
            offsets: vec![0; self.num_nodes() + 1],
            neighbors: Vec::new(),
            features: self.features.clone(),
            labels: self.labels.clone(),
            num_classes: self.num_classes,
            role: self.role,
        }
    }

    /// Copy of the graph with its labels dropped.
    pub fn without_labels(&self) -> Graph {
        Graph {
            labels: None,
            ..self.clone()
        }
    }

    /// Copy with the feature row of `v` replaced.
    pub fn with_feature_row(&self, v: usize, row: &[f64]) -> Result<Graph> {
        self.check_node(v)?;
        if row.len() != self.feature_dim() {
            return Err(Error::Dimension(format!(
                "row of length {} for feature dim {}",
                row.len(),
                self.feature_dim()
            )));
        }
        let mut g = self.clone();
        g.features.row_mut(v).assign(&ArrayView1::from(row));
        Ok(g)
    }
}

/// Sorted set of distinct node ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }

    pub fn all(num_nodes: usize) -> Self {
        Self((0..num_nodes).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Position of `v` within the set, if present.
    pub fn rank(&self, v: usize) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.iter().all(|v| !other.contains(v))
    }

    pub fn validate_for(&self, graph: &Graph) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= graph.num_nodes() => Err(Error::InvalidNode {
                node: v,
                num_nodes: graph.num_nodes(),
            }),
            _ => Ok(()),
        }
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Includes each node independently with probability `gamma`.
pub fn poisson_sample<R: Rng + ?Sized>(graph: &Graph, gamma: f64, rng: &mut R) -> Result<NodeSet> {
    poisson_sample_ids(graph.num_nodes(), gamma, rng)
}

pub fn poisson_sample_ids<R: Rng + ?Sized>(num_nodes: usize, gamma: f64, rng: &mut R) -> Result<NodeSet> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    // One draw per node regardless of gamma keeps the stream position fixed.
    Ok(NodeSet(
        (0..num_nodes).filter(|_| rng.random::<f64>() < gamma).collect(),
    ))
}

/// Feature-space distance used for KNN retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn distance(self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let dot = a.dot(&b);
                let norms = a.dot(&a).sqrt() * b.dot(&b).sqrt();
                if norms == 0.0 {
                    1.0
                } else {
                    1.0 - dot / norms
                }
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Outcome of a KNN retrieval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnSelection {
    pub nodes: NodeSet,
    /// Set when fewer than `k` candidates were available.
    pub truncated: bool,
}

/// The `k` candidates closest to `query`; ties go to the smaller node id.
pub fn knn_select(
    query: ArrayView1<'_, f64>,
    candidates: &NodeSet,
    graph: &Graph,
    k: usize,
    metric: Metric,
) -> Result<KnnSelection> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    candidates.validate_for(graph)?;
    if query.len() != graph.feature_dim() {
        return Err(Error::Dimension(format!(
            "query has {} features, graph has {}",
            query.len(),
            graph.feature_dim()
        )));
    }
    if candidates.len() <= k {
        if candidates.len() < k {
            log::warn!(
                "only {} candidates available for k = {}; using all of them",
                candidates.len(),
                k
            );
        }
        return Ok(KnnSelection {
            nodes: candidates.clone(),
            truncated: candidates.len() < k,
        });
    }
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|u| (metric.distance(query, graph.feature_row(u)), u))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    scored.select_nth_unstable_by(k - 1, by_distance);
    Ok(KnnSelection {
        nodes: scored[..k].iter().map(|&(_, u)| u).collect(),
        truncated: false,
    })
}

/// A subgraph with dense ids and the mapping back to the parent graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub graph: Graph,
    /// `parent_ids[i]` is the parent id of local node `i`.
    pub parent_ids: Vec<usize>,
}

impl Subgraph {
    pub fn local_id(&self, parent: usize) -> Option<usize> {
        self.parent_ids.binary_search(&parent).ok()
    }
}

/// Subgraph induced by `nodes`: features, labels and every edge with both
/// endpoints inside the set.
pub fn induced_subgraph(graph: &Graph, nodes: &NodeSet) -> Result<Subgraph> {
    nodes.validate_for(graph)?;
    let parent_ids = nodes.as_slice().to_vec();
    let features = graph.features.select(Axis(0), &parent_ids);
    let labels = graph
        .labels
        .as_ref()
        .map(|l| parent_ids.iter().map(|&v| l[v]).collect());
    let mut edges = Vec::new();
    for (local_u, &u) in parent_ids.iter().enumerate() {
        for &v in graph.neighbors(u) {
            if u < v {
                if let Some(local_v) = nodes.rank(v) {
                    edges.push((local_u, local_v));
                }
            }
        }
    }
    let graph = Graph::new(parent_ids.len(), edges, features, labels, graph.num_classes, graph.role)?;
    Ok(Subgraph { graph, parent_ids })
}

/// Nodes within `l` hops of `v`, including `v` itself.
pub fn l_hop_neighborhood(graph: &Graph, v: usize, l: usize) -> Result<NodeSet> {
    graph.check_node(v)?;
    let mut depth = vec![usize::MAX; graph.num_nodes()];
    let mut reached = vec![v];
    let mut queue = VecDeque::from([v]);
    depth[v] = 0;
    while let Some(u) = queue.pop_front() {
        if depth[u] == l {
            continue;
        }
        for &w in graph.neighbors(u) {
            if depth[w] == usize::MAX {
                depth[w] = depth[u] + 1;
                reached.push(w);
                queue.push_back(w);
            }
        }
    }
    Ok(NodeSet::new(reached))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    use crate::seed::StreamRng;

    fn path(n: usize) -> Graph {
        Graph::new(
            n,
            (0..n - 1).map(|i| (i, i + 1)),
            Array2::zeros((n, 1)),
            None,
            1,
            Role::Public,
        )
        .unwrap()
    }

    #[test]
    fn construction_normalizes_edges() {
        let g = Graph::new(
            3,
            vec![(0, 1), (1, 0), (1, 1), (2, 1), (0, 1)],
            Array2::zeros((3, 2)),
            Some(vec![0, 1, 0]),
            2,
            Role::Private,
        )
        .unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn construction_rejects_invalid_input() {
        let f = || Array2::zeros((2, 1));
        assert!(Graph::new(2, vec![(0, 2)], f(), None, 1, Role::Public).is_err());
        assert!(Graph::new(3, vec![], f(), None, 1, Role::Public).is_err());
        assert!(Graph::new(2, vec![], f(), Some(vec![0, 3]), 2, Role::Public).is_err());
        assert!(Graph::new(2, vec![], f(), Some(vec![0]), 2, Role::Public).is_err());
    }

    #[test]
    fn poisson_extremes() {
        let g = path(20);
        let mut rng = StreamRng::seed_from_u64(1);
        assert!(poisson_sample(&g, 0.0, &mut rng).unwrap().is_empty());
        assert_eq!(poisson_sample(&g, 1.0, &mut rng).unwrap(), NodeSet::all(20));
        assert!(poisson_sample(&g, 1.5, &mut rng).is_err());
    }

    #[test]
    fn poisson_is_reproducible() {
        let g = path(500);
        let a = poisson_sample(&g, 0.3, &mut StreamRng::seed_from_u64(5)).unwrap();
        let b = poisson_sample(&g, 0.3, &mut StreamRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn l_hop_examples() {
        let g = path(4);
        assert_eq!(l_hop_neighborhood(&g, 2, 0).unwrap(), NodeSet::new(vec![2]));
        assert_eq!(l_hop_neighborhood(&g, 0, 2).unwrap(), NodeSet::new(vec![0, 1, 2]));
        assert_eq!(l_hop_neighborhood(&g, 1, 1).unwrap(), NodeSet::new(vec![0, 1, 2]));
        assert!(l_hop_neighborhood(&g, 4, 1).is_err());
    }

    #[test]
    fn induced_subgraph_examples() {
        let tri = Graph::new(
            3,
            vec![(0, 1), (1, 2), (0, 2)],
            array![[0.0], [1.0], [2.0]],
            Some(vec![0, 1, 1]),
            2,
            Role::Private,
        )
        .unwrap();
        let sub = induced_subgraph(&tri, &NodeSet::new(vec![0, 1])).unwrap();
        assert_eq!(sub.graph.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(sub.graph.labels(), Some(&[0, 1][..]));

        let single = induced_subgraph(&tri, &NodeSet::new(vec![2])).unwrap();
        assert_eq!(single.graph.num_nodes(), 1);
        assert_eq!(single.graph.num_edges(), 0);
        assert_eq!(single.graph.feature_row(0)[0], 2.0);
        assert_eq!(single.parent_ids, vec![2]);

        let all = induced_subgraph(&tri, &NodeSet::all(3)).unwrap();
        assert_eq!(all.graph, tri);
        assert!(induced_subgraph(&tri, &NodeSet::new(vec![5])).is_err());
    }

    #[test]
    fn knn_examples() {
        let g = Graph::new(
            5,
            vec![],
            array![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 3.0], [-1.0, 0.0]],
            None,
            1,
            Role::Private,
        )
        .unwrap();
        let all = NodeSet::all(5);
        let q = array![0.1, 0.0];
        let sel = knn_select(q.view(), &all, &g, 2, Metric::Euclidean).unwrap();
        assert_eq!(sel.nodes, NodeSet::new(vec![0, 1]));
        assert!(!sel.truncated);

        // equidistant: 1 and 4 both at distance 1 from the origin
        let q = array![0.0, 0.0];
        let sel = knn_select(q.view(), &all, &g, 2, Metric::Euclidean).unwrap();
        assert_eq!(sel.nodes, NodeSet::new(vec![0, 1]));

        let sel = knn_select(q.view(), &all, &g, 5, Metric::Euclidean).unwrap();
        assert_eq!(sel.nodes, all);
        let sel = knn_select(q.view(), &NodeSet::new(vec![3]), &g, 4, Metric::Cosine).unwrap();
        assert_eq!(sel.nodes, NodeSet::new(vec![3]));
        assert!(sel.truncated);
        assert!(matches!(
            knn_select(q.view(), &NodeSet::default(), &g, 1, Metric::Euclidean),
            Err(Error::EmptyCandidates)
        ));
        assert!(knn_select(q.view(), &all, &g, 0, Metric::Euclidean).is_err());
    }

    #[test]
    fn cosine_distance() {
        let a = array![1.0, 0.0];
        let b = array![0.0, 2.0];
        let z = array![0.0, 0.0];
        assert!((Metric::Cosine.distance(a.view(), b.view()) - 1.0).abs() < 1e-15);
        assert!(Metric::Cosine.distance(a.view(), a.view()).abs() < 1e-15);
        assert_eq!(Metric::Cosine.distance(a.view(), z.view()), 1.0);
    }
}
