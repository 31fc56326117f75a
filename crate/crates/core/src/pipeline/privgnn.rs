//! Per-query teachers on KNN subgraphs of a Poisson subsample, noisy
//! pseudo-labels, and a student trained on the public graph.

use std::time::Instant;

use ndarray::Array1;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::noise::noisy_pseudo_label;
use super::private::{AccessScope, PrivateGraph, PublicData};
use super::report::{config_hash, ExperimentReport};
use crate::accountant::{privgnn_budget_with, AccountantOptions, Budget, PrivacyParams};
use crate::error::{Error, Result};
use crate::exec::{try_run_indexed, Executor, JobOrder};
use crate::gnn::{argmax, Model, ModelConfig};
use crate::graph::{Metric, NodeSet};
use crate::seed::{stream_rng, Stream};

/// Settings of a PrivGNN run. The number of queries lives in `privacy.num_queries`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivGnnConfig {
    pub privacy: PrivacyParams,
    pub k_neighbors: usize,
    pub metric: Metric,
    pub teacher: ModelConfig,
    pub student: ModelConfig,
    /// Draw a fresh Poisson subsample for every query instead of once per run.
    pub resample_per_query: bool,
    pub master_seed: u64,
    pub accountant: AccountantOptions,
    /// Release clean arg-max labels. The reported budget is then absent.
    pub noiseless: bool,
}

impl Default for PrivGnnConfig {
    fn default() -> Self {
        Self {
            privacy: PrivacyParams::default(),
            k_neighbors: 100,
            metric: Metric::Euclidean,
            teacher: ModelConfig::gnn(),
            student: ModelConfig::gnn(),
            resample_per_query: true,
            master_seed: 0,
            accountant: AccountantOptions::default(),
            noiseless: false,
        }
    }
}

impl PrivGnnConfig {
    pub fn validate(&self, num_classes: usize, num_public_train: usize) -> Result<()> {
        self.privacy.validate()?;
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be at least 1".into()));
        }
        if self.privacy.num_queries as usize > num_public_train {
            return Err(Error::Config(format!(
                "{} queries requested but only {num_public_train} public train nodes exist",
                self.privacy.num_queries
            )));
        }
        self.teacher.clone().with_classes(num_classes).validate()?;
        self.student.clone().with_classes(num_classes).validate()?;
        self.accountant.curve_orders()?;
        Ok(())
    }
}

/// Scheduling knobs that must not change any result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub executor: Executor,
    pub order: JobOrder,
}

/// What one query job produced.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub query_index: usize,
    pub node: usize,
    pub posterior: Array1<f64>,
    pub pseudo_label: usize,
    pub teacher_subgraph_size: usize,
    pub teacher_edges: usize,
    pub sample_size: usize,
    pub knn_truncated: bool,
}

#[derive(Debug, Clone)]
pub struct PrivGnnOutcome {
    pub student: Model,
    pub report: ExperimentReport,
    pub queries: Vec<QueryOutcome>,
    pub budget: Option<Budget>,
}

/// Query nodes drawn uniformly without replacement from `train`, sorted.
pub fn select_queries(train: &NodeSet, count: usize, master_seed: u64) -> Result<NodeSet> {
    if count > train.len() {
        return Err(Error::Config(format!(
            "cannot draw {count} queries from {} public train nodes",
            train.len()
        )));
    }
    let mut rng = stream_rng(master_seed, Stream::QuerySelection, 0);
    let picked = index::sample(&mut rng, train.len(), count);
    Ok(picked.into_iter().map(|i| train.as_slice()[i]).collect())
}

/// Trains the student on the public graph with `labels[i]` as the target of `queries[i]`.
pub fn train_student(
    public: &PublicData,
    queries: &NodeSet,
    labels: &[usize],
    config: &ModelConfig,
    num_classes: usize,
    master_seed: u64,
) -> Result<Model> {
    let mut rng = stream_rng(master_seed, Stream::Student, 0);
    let config = config.clone().with_classes(num_classes);
    let mut student = Model::new(config, public.graph.feature_dim(), &mut rng)?;
    student.train(&public.graph, queries, labels, &mut rng)?;
    Ok(student)
}

fn answer_query(
    private: &PrivateGraph,
    public: &PublicData,
    config: &PrivGnnConfig,
    shared_sample: Option<&NodeSet>,
    query_index: usize,
    node: usize,
) -> Result<QueryOutcome> {
    let mut rng = stream_rng(config.master_seed, Stream::QueryJob, query_index as u64);
    let fresh;
    let sample = match shared_sample {
        Some(s) => s,
        None => {
            fresh = private.poisson_sample(config.privacy.gamma, &mut rng)?;
            &fresh
        }
    };
    let mut scope = AccessScope::default();
    let query = public.graph.feature_row(node);
    let knn = private.knn_select(query, sample, config.k_neighbors, config.metric, &mut scope)?;
    let teacher_data = private.labelled_subgraph(&knn.nodes, &mut scope)?;
    if scope.label_set() != knn.nodes {
        return Err(Error::DataFlow(format!(
            "teacher for query {query_index} read labels outside its KNN set"
        )));
    }
    let sub = &teacher_data.graph;
    let labels = sub.labels().expect("private subgraphs carry labels");
    let teacher_config = config.teacher.clone().with_classes(private.num_classes());
    let mut teacher = Model::new(teacher_config, sub.feature_dim(), &mut rng)?;
    teacher.train(sub, &NodeSet::all(sub.num_nodes()), labels, &mut rng)?;
    let posterior = teacher.predict_posterior(&public.graph, node, teacher.config().receptive_field())?;
    let pseudo_label = if config.noiseless {
        argmax(posterior.iter().copied())
    } else {
        noisy_pseudo_label(
            posterior.as_slice().expect("contiguous"),
            config.privacy.beta(),
            &mut rng,
        )?
    };
    Ok(QueryOutcome {
        query_index,
        node,
        posterior,
        pseudo_label,
        teacher_subgraph_size: sub.num_nodes(),
        teacher_edges: sub.num_edges(),
        sample_size: sample.len(),
        knn_truncated: knn.truncated,
    })
}

/// Runs the full pipeline and accounts its privacy cost.
pub fn privgnn_run(
    private: &PrivateGraph,
    public: &PublicData,
    config: &PrivGnnConfig,
    options: RunOptions,
) -> Result<PrivGnnOutcome> {
    let start = Instant::now();
    let num_classes = private.num_classes();
    config.validate(num_classes, public.train.len())?;
    if let Some(w) = config.privacy.delta_warning(private.num_nodes()) {
        log::warn!("{w}");
    }
    private.begin_run();

    let queries = select_queries(&public.train, config.privacy.num_queries as usize, config.master_seed)?;
    let shared_sample = if config.resample_per_query {
        None
    } else {
        let mut rng = stream_rng(config.master_seed, Stream::PoissonOnce, 0);
        Some(private.poisson_sample(config.privacy.gamma, &mut rng)?)
    };
    let nodes = queries.as_slice();
    let outcomes = try_run_indexed(nodes.len(), options.executor, options.order, |i| {
        answer_query(private, public, config, shared_sample.as_ref(), i, nodes[i]).map_err(|e| Error::Query {
            query: i,
            node: nodes[i],
            source: Box::new(e),
        })
    })?;
    let truncated = outcomes.iter().filter(|q| q.knn_truncated).count();
    if truncated > 0 {
        log::warn!(
            "{truncated} queries had fewer than k = {} sampled candidates",
            config.k_neighbors
        );
    }

    private.seal();
    let labels: Vec<usize> = outcomes.iter().map(|q| q.pseudo_label).collect();
    let student = train_student(
        public,
        &queries,
        &labels,
        &config.student,
        num_classes,
        config.master_seed,
    )?;
    let accuracy = student.accuracy(&public.graph, &public.test, public.test_labels()?)?;
    let leaked = private.accesses_after_seal().total();
    if leaked != 0 {
        return Err(Error::DataFlow(format!("student stage made {leaked} private reads")));
    }

    let budget = if config.noiseless {
        None
    } else {
        Some(privgnn_budget_with(&config.privacy, &config.accountant)?)
    };
    let report = ExperimentReport {
        method: "privgnn".into(),
        config_hash: config_hash(config)?,
        seed: config.master_seed,
        accuracy,
        epsilon: budget.map(|b| b.tight.epsilon),
        delta: budget.map(|b| b.tight.delta),
        optimal_alpha: budget.map(|b| b.tight.optimal_order),
        crude_epsilon: budget.map(|b| b.crude),
        num_queries: config.privacy.num_queries,
        private_accesses: private.accesses(),
        private_accesses_during_student: leaked,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(PrivGnnOutcome {
        student,
        report,
        queries: outcomes,
        budget,
    })
}
