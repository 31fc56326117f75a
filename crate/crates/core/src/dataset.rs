//! Dataset directories.
//!
//! A dataset directory holds one graph whose nodes are split into a private
//! part and a public part:
//!
//! * `edges.csv`: one `u,v` pair per line, 0-based ids.
//! * `features.csv`: line `i` holds the comma-separated features of node `i`.
//! * `labels.csv`: `node_id,label` lines.
//! * `split.json`: `{"private_nodes": [..], "public_train_nodes": [..], "public_test_nodes": [..]}`.
//!
//! Files are UTF-8 with LF line endings and no header rows. The private and
//! public node sets must be disjoint and no edge may cross between them.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, Graph, NodeSet, Role};

/// Contents of `split.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub private_nodes: Vec<usize>,
    pub public_train_nodes: Vec<usize>,
    pub public_test_nodes: Vec<usize>,
}

/// A private graph, a disjoint public graph, and the public train/test split
/// expressed in public-graph ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub private: Graph,
    pub public: Graph,
    pub public_train: NodeSet,
    pub public_test: NodeSet,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.private.num_classes().max(self.public.num_classes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.private.labels().is_none() {
            return Err(Error::Dataset("private graph has no labels".into()));
        }
        if self.private.feature_dim() != self.public.feature_dim() {
            return Err(Error::Dataset(format!(
                "private features have dim {}, public {}",
                self.private.feature_dim(),
                self.public.feature_dim()
            )));
        }
        self.public_train.validate_for(&self.public)?;
        self.public_test.validate_for(&self.public)?;
        if !self.public_train.is_disjoint(&self.public_test) {
            return Err(Error::Dataset("public train and test nodes overlap".into()));
        }
        Ok(())
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn records<F>(path: &Path, mut each: F) -> Result<()>
where
    F: FnMut(u64, &csv::StringRecord) -> Result<()>,
{
    let mut rdr = reader(path)?;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        each(line, &record)?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{field}`")))
}

fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    records(path, |line, rec| {
        let row = rec
            .iter()
            .map(|f| parse_field::<f64>(path, line, f, "feature"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(path, line, format!("non-finite feature {v}")));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {} features, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
        Ok(())
    })?;
    let dim = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), dim), flat).map_err(|e| parse_err(path, 0, e.to_string()))
}

fn read_pairs(path: &Path, what: &str) -> Result<Vec<(u64, usize, usize)>> {
    let mut out = Vec::new();
    records(path, |line, rec| {
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        let a = parse_field(path, line, &rec[0], what)?;
        let b = parse_field(path, line, &rec[1], what)?;
        out.push((line, a, b));
        Ok(())
    })?;
    Ok(out)
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let features_path = dir.join("features.csv");
    let edges_path = dir.join("edges.csv");
    let labels_path = dir.join("labels.csv");
    let split_path = dir.join("split.json");

    let features = read_features(&features_path)?;
    let n = features.nrows();

    let edges = read_pairs(&edges_path, "node id")?;
    for &(line, u, v) in &edges {
        if u >= n || v >= n {
            return Err(parse_err(
                &edges_path,
                line,
                format!("edge ({u}, {v}) references a node outside 0..{n}"),
            ));
        }
    }

    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (line, v, y) in read_pairs(&labels_path, "label entry")? {
        if v >= n {
            return Err(parse_err(&labels_path, line, format!("node {v} outside 0..{n}")));
        }
        if labels[v].replace(y).is_some() {
            return Err(parse_err(&labels_path, line, format!("duplicate label for node {v}")));
        }
    }
    let num_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);

    let split_text = fs::read_to_string(&split_path).map_err(|e| parse_err(&split_path, 0, e.to_string()))?;
    let split: Split =
        serde_json::from_str(&split_text).map_err(|e| parse_err(&split_path, e.line() as u64, e.to_string()))?;

    let private_ids = NodeSet::new(split.private_nodes.clone());
    let train_ids = NodeSet::new(split.public_train_nodes.clone());
    let test_ids = NodeSet::new(split.public_test_nodes.clone());
    for set in [&private_ids, &train_ids, &test_ids] {
        if let Some(&v) = set.as_slice().last() {
            if v >= n {
                return Err(parse_err(
                    &split_path,
                    0,
                    format!("split references node {v} outside 0..{n}"),
                ));
            }
        }
    }
    if !train_ids.is_disjoint(&test_ids) {
        return Err(parse_err(&split_path, 0, "public train and test nodes overlap"));
    }
    let public_ids: NodeSet = train_ids.iter().chain(test_ids.iter()).collect();
    if !private_ids.is_disjoint(&public_ids) {
        return Err(parse_err(&split_path, 0, "private and public node sets overlap"));
    }
    for &(line, u, v) in &edges {
        let crosses =
            (private_ids.contains(u) && public_ids.contains(v)) || (private_ids.contains(v) && public_ids.contains(u));
        if crosses {
            return Err(parse_err(
                &edges_path,
                line,
                format!("edge ({u}, {v}) crosses the private/public boundary"),
            ));
        }
    }
    if let Some(v) = private_ids.iter().find(|&v| labels[v].is_none()) {
        return Err(parse_err(&labels_path, 0, format!("private node {v} has no label")));
    }

    let build = |ids: &NodeSet, role: Role| -> Result<Graph> {
        // Unlabeled nodes outside `ids` get a placeholder that the induced subgraph drops.
        let node_labels = if ids.iter().all(|v| labels[v].is_some()) {
            Some(labels.iter().map(|l| l.unwrap_or(0)).collect())
        } else {
            None
        };
        let whole = Graph::new(
            n,
            edges.iter().map(|&(_, u, v)| (u, v)),
            features.clone(),
            node_labels,
            num_classes,
            role,
        )?;
        Ok(induced_subgraph(&whole, ids)?.graph)
    };
    let private = build(&private_ids, Role::Private)?;
    let public = build(&public_ids, Role::Public)?;
    if public.labels().is_none() {
        log::warn!("public graph is not fully labeled; accuracy evaluation is unavailable");
    }
    let to_public = |ids: &NodeSet| ids.iter().map(|v| public_ids.rank(v).expect("subset")).collect();
    let dataset = Dataset {
        private,
        public,
        public_train: to_public(&train_ids),
        public_test: to_public(&test_ids),
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes `dataset` as a directory; private nodes come first, then public nodes.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let offset = dataset.private.num_nodes();
    let graphs = [(&dataset.private, 0usize), (&dataset.public, offset)];

    let mut edges = String::new();
    let mut features = String::new();
    let mut labels = String::new();
    for (g, base) in graphs {
        for (u, v) in g.edges() {
            edges.push_str(&format!("{},{}\n", u + base, v + base));
        }
        for row in g.features().rows() {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            features.push_str(&line.join(","));
            features.push('\n');
        }
        if let Some(ls) = g.labels() {
            for (v, y) in ls.iter().enumerate() {
                labels.push_str(&format!("{},{}\n", v + base, y));
            }
        }
    }
    let split = Split {
        private_nodes: (0..offset).collect(),
        public_train_nodes: dataset.public_train.iter().map(|v| v + offset).collect(),
        public_test_nodes: dataset.public_test.iter().map(|v| v + offset).collect(),
    };
    write(dir.join("edges.csv"), edges)?;
    write(dir.join("features.csv"), features)?;
    write(dir.join("labels.csv"), labels)?;
    write(dir.join("split.json"), serde_json::to_string_pretty(&split)? + "\n")?;
    Ok(())
}

fn write(path: PathBuf, contents: String) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_dir(edges: &str, features: &str, labels: &str, split: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("edges.csv"), edges).unwrap();
        fs::write(dir.path().join("features.csv"), features).unwrap();
        fs::write(dir.path().join("labels.csv"), labels).unwrap();
        fs::write(dir.path().join("split.json"), split).unwrap();
        dir
    }

    const FEATURES: &str = "0.0,1.0\n1.0,0.0\n0.5,0.5\n2.0,2.0\n3.0,1.0\n";
    const LABELS: &str = "0,0\n1,1\n2,0\n3,1\n4,0\n";
    const SPLIT: &str = r#"{"private_nodes":[0,1,2],"public_train_nodes":[3],"public_test_nodes":[4]}"#;

    #[test]
    fn loads_valid_directory() {
        let dir = write_dir("0,1\n1,2\n2,2\n3,4\n", FEATURES, LABELS, SPLIT);
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.private.num_nodes(), 3);
        assert_eq!(ds.private.num_edges(), 2);
        assert_eq!(ds.public.num_nodes(), 2);
        assert_eq!(ds.public.num_edges(), 1);
        assert_eq!(ds.public_train, NodeSet::new(vec![0]));
        assert_eq!(ds.public_test, NodeSet::new(vec![1]));
        assert_eq!(ds.public.feature_row(1).to_vec(), vec![3.0, 1.0]);
        assert_eq!(ds.private.labels(), Some(&[0, 1, 0][..]));
    }

    #[test]
    fn rejects_crossing_edge_with_line_number() {
        let dir = write_dir("0,1\n2,3\n", FEATURES, LABELS, SPLIT);
        let err = load_dataset(dir.path()).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("crosses"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reports_bad_feature_line() {
        let dir = write_dir("0,1\n", "0.0,1.0\n1.0,x\n0,0\n0,0\n0,0\n", LABELS, SPLIT);
        match load_dataset(dir.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_overlapping_split_and_missing_labels() {
        let overlap = r#"{"private_nodes":[0,1,3],"public_train_nodes":[3],"public_test_nodes":[4]}"#;
        let dir = write_dir("0,1\n", FEATURES, LABELS, overlap);
        assert!(load_dataset(dir.path()).is_err());

        let dir = write_dir("0,1\n", FEATURES, "0,0\n1,1\n3,1\n4,0\n", SPLIT);
        assert!(load_dataset(dir.path()).is_err());
    }

    #[test]
    fn save_then_load_preserves_structure() {
        let dir = write_dir("0,1\n1,2\n3,4\n", FEATURES, LABELS, SPLIT);
        let ds = load_dataset(dir.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        save_dataset(&ds, out.path()).unwrap();
        let back = load_dataset(out.path()).unwrap();
        assert_eq!(back.private, ds.private);
        assert_eq!(back.public, ds.public);
        assert_eq!(back.public_train, ds.public_train);
        assert_eq!(back.public_test, ds.public_test);
    }
}
