//! TOML run configuration.
//!
//! ```toml
//! version = 1
//!
//! [dataset]
//! # Either a dataset directory (relative paths resolve against the config file) ...
//! dir = "data/my-graph"
//! # ... or a synthetic stochastic block model.
//! # [dataset.synthetic]
//! # num_classes = 4
//! # nodes_per_class = 200
//! seed = 0
//!
//! [privgnn]
//! k_neighbors = 100
//! metric = "euclidean"          # or "cosine"
//! resample_per_query = true
//! master_seed = 0
//! noiseless = false
//!
//! [privgnn.privacy]
//! gamma = 0.3
//! lambda = 0.1
//! num_queries = 500
//! delta = 1e-4
//!
//! [privgnn.teacher]              # same keys for [privgnn.student]
//! kind = "gnn"                   # or "mlp"
//! hidden_dim = 64
//! num_layers = 2
//! dropout = 0.5
//! learning_rate = 0.01
//! epochs = 500
//! batch_norm_after_first = true
//!
//! [privgnn.accountant]
//! alpha_max = 32
//! conversion = "shifted"         # or "lemma"
//! ```
//!
//! Every key except `version` and the dataset source is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::harness::{generate_sbm, SbmSpec};
use crate::pipeline::PrivGnnConfig;

pub const CONFIG_VERSION: u32 = 1;

/// Where a run gets its graphs from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    pub dir: Option<PathBuf>,
    pub synthetic: Option<SbmSpec>,
    /// Seed of the synthetic generator.
    #[serde(default)]
    pub seed: u64,
}

impl DatasetSource {
    pub fn synthetic(spec: SbmSpec, seed: u64) -> Self {
        Self {
            dir: None,
            synthetic: Some(spec),
            seed,
        }
    }

    /// Loads or generates the dataset; `base` anchors relative directories.
    pub fn materialize(&self, base: Option<&Path>) -> Result<Dataset> {
        match (&self.dir, &self.synthetic) {
            (Some(dir), None) => {
                let dir = match base {
                    Some(b) if dir.is_relative() => b.join(dir),
                    _ => dir.clone(),
                };
                load_dataset(&dir)
            }
            (None, Some(spec)) => generate_sbm(spec, self.seed),
            _ => Err(Error::Config(
                "dataset needs exactly one of `dir` or `synthetic`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub privgnn: PrivGnnConfig,
}

pub(crate) fn check_version(version: u32) -> Result<()> {
    if version != CONFIG_VERSION {
        return Err(Error::Config(format!(
            "unsupported config version {version}, expected {CONFIG_VERSION}"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        check_version(config.version)?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<(Self, Dataset)> {
        let config = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        let dataset = config.dataset.materialize(path.parent())?;
        Ok((config, dataset))
    }
}

/// Input of `gen-synthetic`: `version = 1`, an optional `seed`, and an `[sbm]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sbm: SbmSpec,
}

impl SyntheticConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SyntheticConfig = toml::from_str(text)?;
        check_version(config.version)?;
        config.sbm.validate()?;
        Ok(config)
    }
}
