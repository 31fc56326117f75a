//! PATE baselines: disjoint teacher partitions and noisy vote aggregation.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::noise::noisy_vote_label;
use super::private::{AccessScope, PrivateGraph, PublicData};
use super::privgnn::{select_queries, train_student, PrivGnnConfig, RunOptions};
use super::report::{config_hash, ExperimentReport};
use crate::accountant::{pate_budget_with, AccountantOptions, DpGuarantee};
use crate::error::{Error, Result};
use crate::exec::try_run_indexed;
use crate::gnn::{argmax, Model, ModelConfig, ModelKind};
use crate::graph::NodeSet;
use crate::seed::{stream_rng, Stream};

/// Settings of a PATE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PateConfig {
    pub num_teachers: usize,
    /// `gnn` trains on partition-induced subgraphs, `mlp` on bare feature rows.
    pub teacher: ModelConfig,
    pub student: ModelConfig,
    pub lambda: f64,
    pub num_queries: u64,
    pub delta: f64,
    pub master_seed: u64,
    pub accountant: AccountantOptions,
    pub noiseless: bool,
}

impl Default for PateConfig {
    fn default() -> Self {
        Self::from_privgnn(&PrivGnnConfig::default(), 20, ModelKind::Gnn)
    }
}

impl PateConfig {
    /// Shares noise level, query count, δ, student and seed with a PrivGNN config.
    pub fn from_privgnn(config: &PrivGnnConfig, num_teachers: usize, kind: ModelKind) -> Self {
        let teacher = if config.teacher.kind == kind {
            config.teacher.clone()
        } else {
            ModelConfig {
                kind,
                num_layers: ModelConfig::for_kind(kind).num_layers,
                ..config.teacher.clone()
            }
        };
        Self {
            num_teachers,
            teacher,
            student: config.student.clone(),
            lambda: config.privacy.lambda,
            num_queries: config.privacy.num_queries,
            delta: config.privacy.delta,
            master_seed: config.master_seed,
            accountant: AccountantOptions::pate_default(),
            noiseless: config.noiseless,
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self.teacher.kind {
            ModelKind::Gnn => "pate-g",
            ModelKind::Mlp => "pate-m",
        }
    }
}

/// Private ids split into `n` random disjoint parts whose sizes differ by at most one.
pub fn random_partition(num_nodes: usize, n: usize, master_seed: u64) -> Result<Vec<NodeSet>> {
    if n < 2 {
        return Err(Error::Config(format!("PATE needs at least 2 teachers, got {n}")));
    }
    if num_nodes / n < 2 {
        return Err(Error::Config(format!(
            "{num_nodes} private nodes cannot give {n} teachers at least 2 nodes each"
        )));
    }
    let mut ids: Vec<usize> = (0..num_nodes).collect();
    ids.shuffle(&mut stream_rng(master_seed, Stream::Partition, 0));
    let mut parts = vec![Vec::with_capacity(num_nodes / n + 1); n];
    for (i, v) in ids.into_iter().enumerate() {
        parts[i % n].push(v);
    }
    Ok(parts.into_iter().map(NodeSet::new).collect())
}

pub struct PateOutcome {
    pub student: Model,
    pub report: ExperimentReport,
    pub votes: Vec<Vec<u64>>,
    pub pseudo_labels: Vec<usize>,
    pub budget: Option<DpGuarantee>,
}

pub fn pate_run(
    private: &PrivateGraph,
    public: &PublicData,
    config: &PateConfig,
    options: RunOptions,
) -> Result<PateOutcome> {
    let start = Instant::now();
    let num_classes = private.num_classes();
    if !(config.lambda > 0.0 && config.lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be positive, got {}", config.lambda)));
    }
    private.begin_run();
    let parts = random_partition(private.num_nodes(), config.num_teachers, config.master_seed)?;
    let kind = config.teacher.kind;
    let teacher_config = config.teacher.clone().with_classes(num_classes);
    let teachers = try_run_indexed(parts.len(), options.executor, options.order, |t| -> Result<Model> {
        let mut scope = AccessScope::default();
        let sub = match kind {
            ModelKind::Gnn => private.labelled_subgraph(&parts[t], &mut scope)?,
            ModelKind::Mlp => private.feature_subgraph(&parts[t], &mut scope)?,
        };
        let mut rng = stream_rng(config.master_seed, Stream::Teacher, t as u64);
        let mut model = Model::new(teacher_config.clone(), sub.graph.feature_dim(), &mut rng)?;
        let labels = sub.graph.labels().expect("private subgraphs carry labels");
        model.train(&sub.graph, &NodeSet::all(sub.graph.num_nodes()), labels, &mut rng)?;
        Ok(model)
    })?;
    private.seal();

    let queries = select_queries(&public.train, config.num_queries as usize, config.master_seed)?;
    let nodes = queries.as_slice();
    let receptive = teacher_config.receptive_field();
    let labelled = try_run_indexed(
        nodes.len(),
        options.executor,
        options.order,
        |i| -> Result<(Vec<u64>, usize)> {
            let mut votes = vec![0u64; num_classes];
            for teacher in &teachers {
                let posterior = teacher.predict_posterior(&public.graph, nodes[i], receptive)?;
                votes[argmax(posterior.iter().copied())] += 1;
            }
            let label = if config.noiseless {
                argmax(votes.iter().map(|&v| v as f64))
            } else {
                let mut rng = stream_rng(config.master_seed, Stream::QueryJob, i as u64);
                noisy_vote_label(&votes, 1.0 / config.lambda, &mut rng)?
            };
            Ok((votes, label))
        },
    )?;
    let (votes, pseudo_labels): (Vec<_>, Vec<_>) = labelled.into_iter().unzip();

    let student = train_student(
        public,
        &queries,
        &pseudo_labels,
        &config.student,
        num_classes,
        config.master_seed,
    )?;
    let accuracy = student.accuracy(&public.graph, &public.test, public.test_labels()?)?;
    let leaked = private.accesses_after_seal().total();
    if leaked != 0 {
        return Err(Error::DataFlow(format!(
            "aggregation or student stage made {leaked} private reads"
        )));
    }
    let budget = if config.noiseless {
        None
    } else {
        Some(pate_budget_with(
            config.lambda,
            config.num_queries,
            config.delta,
            &config.accountant,
        )?)
    };
    let report = ExperimentReport {
        method: config.method_name().into(),
        config_hash: config_hash(config)?,
        seed: config.master_seed,
        accuracy,
        epsilon: budget.map(|b| b.epsilon),
        delta: budget.map(|b| b.delta),
        optimal_alpha: budget.map(|b| b.optimal_order),
        crude_epsilon: None,
        num_queries: config.num_queries,
        private_accesses: private.accesses(),
        private_accesses_during_student: leaked,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(PateOutcome {
        student,
        report,
        votes,
        pseudo_labels,
        budget,
    })
}
