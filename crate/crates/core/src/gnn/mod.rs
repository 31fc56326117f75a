//! Trainable node classifiers.
//!
//! Two architectures share one implementation: a GraphSAGE-style GNN whose
//! layers compute `W_self·x_v + W_neigh·mean_{u∈N(v)} x_u + b`, and an MLP
//! whose layers drop the neighbor term. Hidden layers apply optional batch
//! normalisation (first layer only), ReLU and dropout; the output layer is a
//! log-softmax. Training is full-batch NLL minimisation with Adam.

mod checkpoint;
pub mod ops;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, l_hop_neighborhood, Graph, NodeSet};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT_VERSION};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const BN_MOMENTUM: f64 = 0.1;
const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gnn,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnn" => Ok(ModelKind::Gnn),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Gnn => "gnn",
            ModelKind::Mlp => "mlp",
        })
    }
}

/// Architecture and optimisation hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_norm_after_first: bool,
    /// Zero means "take it from the training graph".
    pub num_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::gnn()
    }
}

impl ModelConfig {
    /// Two-layer GraphSAGE: hidden 64, dropout 0.5, lr 0.01, 500 epochs, batch norm after layer 1.
    pub fn gnn() -> Self {
        Self {
            kind: ModelKind::Gnn,
            hidden_dim: 64,
            num_layers: 2,
            dropout: 0.5,
            learning_rate: 0.01,
            epochs: 500,
            batch_norm_after_first: true,
            num_classes: 0,
        }
    }

    /// Three fully connected layers with the same training settings.
    pub fn mlp() -> Self {
        Self {
            kind: ModelKind::Mlp,
            num_layers: 3,
            ..Self::gnn()
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Gnn => Self::gnn(),
            ModelKind::Mlp => Self::mlp(),
        }
    }

    pub fn with_classes(mut self, num_classes: usize) -> Self {
        if self.num_classes == 0 {
            self.num_classes = num_classes;
        }
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.num_layers == 0 || self.num_classes == 0 {
            return Err(Error::Config(format!(
                "hidden_dim, num_layers and num_classes must be positive (got {}, {}, {})",
                self.hidden_dim, self.num_layers, self.num_classes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Hops of neighborhood a prediction depends on.
    pub fn receptive_field(&self) -> usize {
        match self.kind {
            ModelKind::Gnn => self.num_layers,
            ModelKind::Mlp => 0,
        }
    }
}

/// A named parameter or buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerSlots {
    self_weight: usize,
    neigh_weight: Option<usize>,
    bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct BatchNormSlots {
    scale: usize,
    shift: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Adam {
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

/// A classifier with its parameters, batch-norm statistics and Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    input_dim: usize,
    params: Vec<Tensor>,
    layers: Vec<LayerSlots>,
    batch_norm: Option<BatchNormSlots>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
    adam: Adam,
    mode: Mode,
}

/// Per-epoch training losses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub losses: Vec<f64>,
}

impl TrainingLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }
}

struct BatchNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

struct LayerCache {
    input: Array2<f64>,
    aggregated: Option<Array2<f64>>,
    /// Input of the ReLU (hidden layers only).
    pre_activation: Option<Array2<f64>>,
    dropout_mask: Option<Array2<f64>>,
    batch_norm: Option<BatchNormCache>,
}

struct ForwardPass {
    log_probs: Array2<f64>,
    layers: Vec<LayerCache>,
    batch_mean: Option<Array1<f64>>,
    batch_var: Option<Array1<f64>>,
}

enum Normalization {
    Batch,
    Running,
}

impl Model {
    /// Fresh model with weights uniform in `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, input_dim: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        let mut params = Vec::new();
        let mut layers = Vec::new();
        let mut push = |name: String, rows: usize, cols: usize, bound: f64, rng: &mut R| {
            let value = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound));
            params.push(Tensor { name, value });
            params.len() - 1
        };
        for i in 0..config.num_layers {
            let fan_in = if i == 0 { input_dim } else { config.hidden_dim };
            let fan_out = if i + 1 == config.num_layers {
                config.num_classes
            } else {
                config.hidden_dim
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            let self_weight = push(format!("layer{i}.self_weight"), fan_in, fan_out, bound, rng);
            let neigh_weight = match config.kind {
                ModelKind::Gnn => Some(push(format!("layer{i}.neigh_weight"), fan_in, fan_out, bound, rng)),
                ModelKind::Mlp => None,
            };
            let bias = push(format!("layer{i}.bias"), 1, fan_out, bound, rng);
            layers.push(LayerSlots {
                self_weight,
                neigh_weight,
                bias,
            });
        }
        let batch_norm = (config.batch_norm_after_first && config.num_layers > 1).then(|| {
            params.push(Tensor {
                name: "bn.scale".into(),
                value: Array2::ones((1, config.hidden_dim)),
            });
            params.push(Tensor {
                name: "bn.shift".into(),
                value: Array2::zeros((1, config.hidden_dim)),
            });
            BatchNormSlots {
                scale: params.len() - 2,
                shift: params.len() - 1,
            }
        });
        let adam = Adam {
            step: 0,
            first: params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect(),
            second: params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect(),
        };
        Ok(Self {
            running_mean: Array1::zeros(config.hidden_dim),
            running_var: Array1::ones(config.hidden_dim),
            config,
            input_dim,
            params,
            layers,
            batch_norm,
            adam,
            mode: Mode::Inference,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn parameters(&self) -> &[Tensor] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    /// Batch-norm running statistics as `(mean, var)`.
    pub fn running_stats(&self) -> (&Array1<f64>, &Array1<f64>) {
        (&self.running_mean, &self.running_var)
    }

    fn check_graph(&self, graph: &Graph) -> Result<()> {
        if graph.feature_dim() != self.input_dim {
            return Err(Error::Dimension(format!(
                "model expects {} input features, graph has {}",
                self.input_dim,
                graph.feature_dim()
            )));
        }
        Ok(())
    }

    fn propagate<R: Rng + ?Sized>(
        &self,
        graph: &Graph,
        norm: Normalization,
        mut dropout_rng: Option<&mut R>,
        keep_cache: bool,
    ) -> ForwardPass {
        let last = self.layers.len() - 1;
        let mut h = graph.features().to_owned();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut batch_mean = None;
        let mut batch_var = None;
        for (i, slots) in self.layers.iter().enumerate() {
            let aggregated = slots.neigh_weight.map(|_| ops::mean_aggregate(graph, &h));
            let mut z = h.dot(&self.params[slots.self_weight].value);
            if let (Some(agg), Some(w)) = (&aggregated, slots.neigh_weight) {
                z += &agg.dot(&self.params[w].value);
            }
            ops::add_row_broadcast(&mut z, &self.params[slots.bias].value);

            if i == last {
                caches.push(LayerCache {
                    input: h,
                    aggregated,
                    pre_activation: None,
                    dropout_mask: None,
                    batch_norm: None,
                });
                h = z;
                break;
            }

            let mut bn_cache = None;
            if let (0, Some(bn)) = (i, &self.batch_norm) {
                let (mean, var) = match norm {
                    Normalization::Batch => {
                        let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                        let var = z.var_axis(Axis(0), 0.0);
                        batch_mean = Some(mean.clone());
                        batch_var = Some(var.clone());
                        (mean, var)
                    }
                    Normalization::Running => (self.running_mean.clone(), self.running_var.clone()),
                };
                let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let normalized = (&z - &mean) * &inv_std;
                z = &normalized * &self.params[bn.scale].value.row(0) + self.params[bn.shift].value.row(0);
                bn_cache = Some(BatchNormCache { normalized, inv_std });
            }

            let mut a = z.mapv(|x| x.max(0.0));
            let mut mask = None;
            if let Some(rng) = dropout_rng.as_deref_mut() {
                if self.config.dropout > 0.0 {
                    let keep = 1.0 - self.config.dropout;
                    let m = Array2::from_shape_simple_fn(a.raw_dim(), || {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    a *= &m;
                    mask = Some(m);
                }
            }
            if keep_cache {
                caches.push(LayerCache {
                    input: h,
                    aggregated,
                    pre_activation: Some(z),
                    dropout_mask: mask,
                    batch_norm: bn_cache,
                });
            }
            h = a;
        }
        ForwardPass {
            log_probs: ops::log_softmax_rows(&h),
            layers: caches,
            batch_mean,
            batch_var,
        }
    }

    /// Per-node log-posteriors over the whole graph in inference mode.
    pub fn log_posteriors(&self, graph: &Graph) -> Result<Array2<f64>> {
        self.check_graph(graph)?;
        Ok(self
            .propagate::<rand::rngs::ThreadRng>(graph, Normalization::Running, None, false)
            .log_probs)
    }

    /// Posterior rows for `nodes` (inference mode: no dropout, running batch-norm statistics).
    pub fn forward(&self, graph: &Graph, nodes: &NodeSet) -> Result<Array2<f64>> {
        nodes.validate_for(graph)?;
        let log_probs = self.log_posteriors(graph)?;
        Ok(log_probs.select(Axis(0), nodes.as_slice()).mapv(f64::exp))
    }

    /// Inductive posterior of `v` computed from the `l`-hop neighborhood only.
    pub fn predict_posterior(&self, graph: &Graph, v: usize, l: usize) -> Result<Array1<f64>> {
        let hood = l_hop_neighborhood(graph, v, l)?;
        let sub = induced_subgraph(graph, &hood)?;
        let local = sub.local_id(v).expect("neighborhood contains its center");
        let log_probs = self.log_posteriors(&sub.graph)?;
        Ok(log_probs.row(local).mapv(f64::exp))
    }

    /// Arg-max class of every node in `nodes`.
    pub fn predict_labels(&self, graph: &Graph, nodes: &NodeSet) -> Result<Vec<usize>> {
        let post = self.forward(graph, nodes)?;
        Ok(post.rows().into_iter().map(|r| argmax(r.iter().copied())).collect())
    }

    /// Fraction of `nodes` whose predicted class equals `labels`.
    pub fn accuracy(&self, graph: &Graph, nodes: &NodeSet, labels: &[usize]) -> Result<f64> {
        if nodes.is_empty() {
            return Err(Error::Config("accuracy over an empty node set".into()));
        }
        let predicted = self.predict_labels(graph, nodes)?;
        let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / nodes.len() as f64)
    }

    fn check_targets(&self, graph: &Graph, nodes: &NodeSet, labels: &[usize]) -> Result<()> {
        self.check_graph(graph)?;
        nodes.validate_for(graph)?;
        if nodes.is_empty() {
            return Err(Error::Config("no training nodes".into()));
        }
        if nodes.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} training nodes but {} labels",
                nodes.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= self.config.num_classes) {
            return Err(Error::Config(format!(
                "label {y} out of range for {} classes",
                self.config.num_classes
            )));
        }
        Ok(())
    }

    fn nll(log_probs: &Array2<f64>, nodes: &NodeSet, labels: &[usize]) -> f64 {
        let total: f64 = nodes.iter().zip(labels).map(|(v, &y)| -log_probs[[v, y]]).sum();
        total / nodes.len() as f64
    }

    fn backward(&self, graph: &Graph, pass: &ForwardPass, nodes: &NodeSet, labels: &[usize]) -> Vec<Array2<f64>> {
        let mut grads: Vec<Array2<f64>> = self.params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect();
        let scale = 1.0 / nodes.len() as f64;
        let mut dz = Array2::zeros(pass.log_probs.raw_dim());
        for (v, &y) in nodes.iter().zip(labels) {
            let mut row = dz.row_mut(v);
            row.assign(&pass.log_probs.row(v).mapv(|lp| lp.exp() * scale));
            row[y] -= scale;
        }
        for i in (0..self.layers.len()).rev() {
            let slots = &self.layers[i];
            let cache = &pass.layers[i];
            grads[slots.self_weight] = cache.input.t().dot(&dz);
            if let (Some(w), Some(agg)) = (slots.neigh_weight, &cache.aggregated) {
                grads[w] = agg.t().dot(&dz);
            }
            grads[slots.bias] = dz.sum_axis(Axis(0)).insert_axis(Axis(0));
            if i == 0 {
                break;
            }
            let mut dh = dz.dot(&self.params[slots.self_weight].value.t());
            if let Some(w) = slots.neigh_weight {
                dh += &ops::mean_aggregate_adjoint(graph, &dz.dot(&self.params[w].value.t()));
            }
            let prev = &pass.layers[i - 1];
            if let Some(mask) = &prev.dropout_mask {
                dh *= mask;
            }
            let pre = prev.pre_activation.as_ref().expect("hidden layer cache");
            dh.zip_mut_with(pre, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
            dz = match (&prev.batch_norm, &self.batch_norm) {
                (Some(bn), Some(slots)) => {
                    grads[slots.scale] = (&dh * &bn.normalized).sum_axis(Axis(0)).insert_axis(Axis(0));
                    grads[slots.shift] = dh.sum_axis(Axis(0)).insert_axis(Axis(0));
                    let d_norm = &dh * &self.params[slots.scale].value.row(0);
                    let n = d_norm.nrows() as f64;
                    let sum = d_norm.sum_axis(Axis(0));
                    let dot = (&d_norm * &bn.normalized).sum_axis(Axis(0));
                    let mut out = d_norm * n - &sum - &(&bn.normalized * &dot);
                    out *= &(&bn.inv_std / n);
                    out
                }
                _ => dh,
            };
        }
        grads
    }

    /// Mean NLL over `nodes` using batch statistics and no dropout.
    pub fn loss(&self, graph: &Graph, nodes: &NodeSet, labels: &[usize]) -> Result<f64> {
        self.check_targets(graph, nodes, labels)?;
        let pass = self.propagate::<rand::rngs::ThreadRng>(graph, Normalization::Batch, None, false);
        Ok(Self::nll(&pass.log_probs, nodes, labels))
    }

    /// Loss and its gradient w.r.t. every parameter, in [`Self::parameters`] order,
    /// using batch statistics and no dropout.
    pub fn loss_and_gradients(
        &self,
        graph: &Graph,
        nodes: &NodeSet,
        labels: &[usize],
    ) -> Result<(f64, Vec<Array2<f64>>)> {
        self.check_targets(graph, nodes, labels)?;
        let pass = self.propagate::<rand::rngs::ThreadRng>(graph, Normalization::Batch, None, true);
        let loss = Self::nll(&pass.log_probs, nodes, labels);
        Ok((loss, self.backward(graph, &pass, nodes, labels)))
    }

    fn adam_step(&mut self, grads: &[Array2<f64>]) {
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let lr = self.config.learning_rate;
        let correct1 = 1.0 - ADAM_BETA1.powi(t);
        let correct2 = 1.0 - ADAM_BETA2.powi(t);
        for (k, grad) in grads.iter().enumerate() {
            let m = &mut self.adam.first[k];
            let v = &mut self.adam.second[k];
            m.zip_mut_with(grad, |m, &g| *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g);
            v.zip_mut_with(grad, |v, &g| *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g);
            let value = &mut self.params[k].value;
            ndarray::Zip::from(value).and(&*m).and(&*v).for_each(|p, &m, &v| {
                *p -= lr * (m / correct1) / ((v / correct2).sqrt() + ADAM_EPS);
            });
        }
    }

    fn update_running_stats(&mut self, pass: &ForwardPass, batch: usize) {
        if let (Some(mean), Some(var)) = (&pass.batch_mean, &pass.batch_var) {
            self.running_mean = &self.running_mean * (1.0 - BN_MOMENTUM) + mean * BN_MOMENTUM;
            if batch > 1 {
                let unbiased = var * (batch as f64 / (batch as f64 - 1.0));
                self.running_var = &self.running_var * (1.0 - BN_MOMENTUM) + unbiased * BN_MOMENTUM;
            }
        }
    }

    /// Runs `config.epochs` full-batch Adam steps on the NLL of `labels` at `nodes`.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        graph: &Graph,
        nodes: &NodeSet,
        labels: &[usize],
        rng: &mut R,
    ) -> Result<TrainingLog> {
        self.check_targets(graph, nodes, labels)?;
        self.mode = Mode::Training;
        let mut log = TrainingLog::default();
        for epoch in 0..self.config.epochs {
            let pass = self.propagate(graph, Normalization::Batch, Some(&mut *rng), true);
            let loss = Self::nll(&pass.log_probs, nodes, labels);
            if !loss.is_finite() {
                self.mode = Mode::Inference;
                return Err(Error::Divergence {
                    epoch,
                    message: format!("loss is {loss}"),
                });
            }
            let grads = self.backward(graph, &pass, nodes, labels);
            self.update_running_stats(&pass, graph.num_nodes());
            self.adam_step(&grads);
            if let Some(p) = self.params.iter().find(|p| p.value.iter().any(|x| !x.is_finite())) {
                self.mode = Mode::Inference;
                return Err(Error::Divergence {
                    epoch,
                    message: format!("parameter {} became non-finite", p.name),
                });
            }
            log.losses.push(loss);
        }
        self.mode = Mode::Inference;
        Ok(log)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}
