//! Stochastic block model generator for desk-scale experiments.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet, Role};
use crate::seed::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmSpec {
    pub num_classes: usize,
    pub nodes_per_class: usize,
    pub intra_p: f64,
    pub inter_p: f64,
    pub feature_dim: usize,
    pub class_mean_separation: f64,
    pub feature_noise_sigma: f64,
    pub private_fraction: f64,
    pub public_train_fraction: f64,
    pub public_test_fraction: f64,
}

impl Default for SbmSpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            nodes_per_class: 200,
            intra_p: 0.05,
            inter_p: 0.002,
            feature_dim: 16,
            class_mean_separation: 1.0,
            feature_noise_sigma: 0.5,
            private_fraction: 0.5,
            public_train_fraction: 0.25,
            public_test_fraction: 0.25,
        }
    }
}

impl SbmSpec {
    pub fn num_nodes(&self) -> usize {
        self.num_classes * self.nodes_per_class
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_classes == 0 || self.nodes_per_class == 0 {
            return bad("every class needs at least one node".into());
        }
        if !(0.0 <= self.inter_p && self.inter_p < self.intra_p && self.intra_p <= 1.0) {
            return bad(format!(
                "need 0 <= inter_p < intra_p <= 1, got inter_p = {}, intra_p = {}",
                self.inter_p, self.intra_p
            ));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if !(self.class_mean_separation >= 0.0 && self.class_mean_separation.is_finite()) {
            return bad("class_mean_separation must be finite and non-negative".into());
        }
        if !(self.feature_noise_sigma >= 0.0 && self.feature_noise_sigma.is_finite()) {
            return bad("feature_noise_sigma must be finite and non-negative".into());
        }
        let fractions = [
            self.private_fraction,
            self.public_train_fraction,
            self.public_test_fraction,
        ];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("split fractions must lie in [0, 1]".into());
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions sum to {total}, expected 1"));
        }
        Ok(())
    }
}

/// Raw SBM draw over all nodes, before the private/public split.
#[derive(Debug, Clone)]
pub struct SbmGraph {
    pub labels: Vec<usize>,
    pub features: Array2<f64>,
    pub edges: Vec<(usize, usize)>,
}

/// Class `c` is centred at `separation` times the unit vector on axis `c mod feature_dim`.
pub fn sample_sbm<R: Rng + ?Sized>(spec: &SbmSpec, rng: &mut R) -> Result<SbmGraph> {
    spec.validate()?;
    let n = spec.num_nodes();
    let labels: Vec<usize> = (0..n).map(|v| v / spec.nodes_per_class).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] {
                spec.intra_p
            } else {
                spec.inter_p
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let noise = Normal::new(0.0, spec.feature_noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut features = Array2::zeros((n, spec.feature_dim));
    for (v, mut row) in features.rows_mut().into_iter().enumerate() {
        for x in row.iter_mut() {
            *x = noise.sample(rng);
        }
        row[labels[v] % spec.feature_dim] += spec.class_mean_separation;
    }
    Ok(SbmGraph {
        labels,
        features,
        edges,
    })
}

/// One SBM split into a private graph and a public graph; edges that would
/// cross the split are dropped.
pub fn generate_sbm(spec: &SbmSpec, seed: u64) -> Result<Dataset> {
    let mut rng = stream_rng(seed, Stream::Synthetic, 0);
    let draw = sample_sbm(spec, &mut rng)?;
    let n = spec.num_nodes();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_private = (spec.private_fraction * n as f64).round() as usize;
    let n_train = ((spec.public_train_fraction * n as f64).round() as usize).min(n - n_private);
    let mut private_ids = order[..n_private].to_vec();
    let mut public_ids = order[n_private..].to_vec();
    let train_ids: Vec<usize> = order[n_private..n_private + n_train].to_vec();
    private_ids.sort_unstable();
    public_ids.sort_unstable();

    let build = |ids: &[usize], role: Role| -> Result<Graph> {
        let mut local = vec![usize::MAX; n];
        for (i, &v) in ids.iter().enumerate() {
            local[v] = i;
        }
        let edges: Vec<(usize, usize)> = draw
            .edges
            .iter()
            .filter(|&&(u, v)| local[u] != usize::MAX && local[v] != usize::MAX)
            .map(|&(u, v)| (local[u], local[v]))
            .collect();
        let features = draw.features.select(ndarray::Axis(0), ids);
        let labels = ids.iter().map(|&v| draw.labels[v]).collect();
        Graph::new(ids.len(), edges, features, Some(labels), spec.num_classes, role)
    };
    let private = build(&private_ids, Role::Private)?;
    let public = build(&public_ids, Role::Public)?;
    let rank = |v: usize| public_ids.binary_search(&v).expect("public node");
    let public_train: NodeSet = train_ids.iter().map(|&v| rank(v)).collect();
    let public_test: NodeSet = (0..public_ids.len()).filter(|v| !public_train.contains(*v)).collect();
    let dataset = Dataset {
        private,
        public,
        public_train,
        public_test,
    };
    dataset.validate()?;
    Ok(dataset)
}
