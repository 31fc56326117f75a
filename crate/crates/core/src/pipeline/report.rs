//! Per-run experiment records.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::private::AccessCounts;
use crate::error::Result;

/// Column order of [`ExperimentReport::table_row`].
pub const TABLE_HEADER: &str = "method,config_hash,seed,accuracy,epsilon,delta,optimal_alpha,wall_time_secs";

/// Outcome of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: String,
    pub config_hash: String,
    pub seed: u64,
    pub accuracy: f64,
    /// Absent for non-private baselines and noiseless runs.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub optimal_alpha: Option<u32>,
    pub crude_epsilon: Option<f64>,
    pub num_queries: u64,
    pub private_accesses: AccessCounts,
    pub private_accesses_during_student: u64,
    pub wall_time_secs: f64,
}

/// First 16 hex digits of the SHA-256 of the JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    Ok(hex::encode(digest)[..16].to_string())
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl ExperimentReport {
    /// Key/value record, one `key = value` per line.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields(true) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Record without wall time, identical across runs with the same seed.
    pub fn deterministic_record(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields(false) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn fields(&self, with_time: bool) -> Vec<(&'static str, String)> {
        let mut f = vec![
            ("method", self.method.clone()),
            ("config_hash", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
            ("accuracy", self.accuracy.to_string()),
            ("epsilon", opt(&self.epsilon)),
            ("delta", opt(&self.delta)),
            ("optimal_alpha", opt(&self.optimal_alpha)),
            ("crude_epsilon", opt(&self.crude_epsilon)),
            ("num_queries", self.num_queries.to_string()),
            ("private_feature_reads", self.private_accesses.feature_rows.to_string()),
            ("private_label_reads", self.private_accesses.labels.to_string()),
            ("private_adjacency_reads", self.private_accesses.adjacency.to_string()),
            (
                "private_accesses_during_student",
                self.private_accesses_during_student.to_string(),
            ),
        ];
        if with_time {
            f.push(("wall_time_secs", format!("{:.3}", self.wall_time_secs)));
        }
        f
    }

    /// Row matching [`TABLE_HEADER`].
    pub fn table_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.method,
            self.config_hash,
            self.seed,
            self.accuracy,
            opt(&self.epsilon),
            opt(&self.delta),
            opt(&self.optimal_alpha),
            self.wall_time_secs
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        ExperimentReport {
            method: "privgnn".into(),
            config_hash: "0123456789abcdef".into(),
            seed: 7,
            accuracy: 0.75,
            epsilon: Some(5.0),
            delta: Some(1e-4),
            optimal_alpha: Some(3),
            crude_epsilon: Some(5.0),
            num_queries: 10,
            private_accesses: AccessCounts::default(),
            private_accesses_during_student: 0,
            wall_time_secs: 1.25,
        }
    }

    #[test]
    fn row_matches_header() {
        let r = sample();
        assert_eq!(r.table_row().split(',').count(), TABLE_HEADER.split(',').count());
        assert_eq!(r.table_row(), "privgnn,0123456789abcdef,7,0.75,5,0.0001,3,1.250");
        assert!(r.to_record().contains("wall_time_secs = 1.250"));
        assert!(!r.deterministic_record().contains("wall_time"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&(1, "x")).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_hash(&(1, "x")).unwrap());
        assert_ne!(a, config_hash(&(2, "x")).unwrap());
    }
}
