//! Non-private reference points.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::private::{AccessScope, PrivateGraph, PublicData};
use super::report::{config_hash, ExperimentReport};
use crate::error::Result;
use crate::gnn::{Model, ModelConfig};
use crate::graph::NodeSet;
use crate::seed::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Trained on the whole private graph, evaluated inductively on public test nodes.
    B1,
    /// Trained on the true public train labels.
    B2,
}

impl std::str::FromStr for Baseline {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b1" => Ok(Baseline::B1),
            "b2" => Ok(Baseline::B2),
            other => Err(crate::Error::Config(format!(
                "unknown baseline `{other}`, expected b1 or b2"
            ))),
        }
    }
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::B1 => "b1",
            Baseline::B2 => "b2",
        }
    }
}

pub struct BaselineOutcome {
    pub model: Model,
    pub report: ExperimentReport,
}

pub fn baseline_b1(
    private: &PrivateGraph,
    public: &PublicData,
    model: &ModelConfig,
    master_seed: u64,
) -> Result<BaselineOutcome> {
    run_baseline(Baseline::B1, private, public, model, master_seed)
}

pub fn baseline_b2(
    private: &PrivateGraph,
    public: &PublicData,
    model: &ModelConfig,
    master_seed: u64,
) -> Result<BaselineOutcome> {
    run_baseline(Baseline::B2, private, public, model, master_seed)
}

pub fn run_baseline(
    which: Baseline,
    private: &PrivateGraph,
    public: &PublicData,
    model: &ModelConfig,
    master_seed: u64,
) -> Result<BaselineOutcome> {
    let start = Instant::now();
    private.begin_run();
    let config = model.clone().with_classes(private.num_classes());
    let mut rng = stream_rng(master_seed, Stream::Baseline, which as u64);
    let mut m = Model::new(config.clone(), public.graph.feature_dim(), &mut rng)?;
    match which {
        Baseline::B1 => {
            let g = private.full(&mut AccessScope::default());
            let labels = g.labels().expect("private graph carries labels");
            m.train(g, &NodeSet::all(g.num_nodes()), labels, &mut rng)?;
        }
        Baseline::B2 => {
            m.train(&public.graph, &public.train, public.train_labels()?, &mut rng)?;
        }
    }
    let accuracy = m.accuracy(&public.graph, &public.test, public.test_labels()?)?;
    let report = ExperimentReport {
        method: which.name().into(),
        config_hash: config_hash(&(which, &config, master_seed))?,
        seed: master_seed,
        accuracy,
        epsilon: None,
        delta: None,
        optimal_alpha: None,
        crude_epsilon: None,
        num_queries: 0,
        private_accesses: private.accesses(),
        private_accesses_during_student: 0,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(BaselineOutcome { model: m, report })
}
