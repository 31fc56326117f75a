//! Plain-text model checkpoints.
//!
//! ```text
//! privgnn-checkpoint 1
//! kind gnn
//! input_dim 16
//! hidden_dim 64
//! num_layers 2
//! num_classes 4
//! dropout 0.5
//! learning_rate 0.01
//! epochs 500
//! batch_norm_after_first true
//! tensor layer0.self_weight 16 64
//! <16 lines of 64 space-separated values>
//! ...
//! end
//! ```
//!
//! Tensors are listed in parameter order followed by the batch-norm running
//! statistics (`bn.running_mean`, `bn.running_var`, both `1 x hidden_dim`).
//! Values are row-major and printed in shortest round-trip form, so a
//! save/load cycle reproduces every weight bit for bit. Adam moments are not
//! stored; a loaded model restarts optimisation from fresh moments.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;

use super::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::seed::StreamRng;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "privgnn-checkpoint";

fn write_tensor(out: &mut String, name: &str, value: &Array2<f64>) {
    let _ = writeln!(out, "tensor {} {} {}", name, value.nrows(), value.ncols());
    for row in value.rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

impl Model {
    pub fn to_checkpoint_string(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {CHECKPOINT_FORMAT_VERSION}");
        let _ = writeln!(out, "kind {}", c.kind);
        let _ = writeln!(out, "input_dim {}", self.input_dim);
        let _ = writeln!(out, "hidden_dim {}", c.hidden_dim);
        let _ = writeln!(out, "num_layers {}", c.num_layers);
        let _ = writeln!(out, "num_classes {}", c.num_classes);
        let _ = writeln!(out, "dropout {:e}", c.dropout);
        let _ = writeln!(out, "learning_rate {:e}", c.learning_rate);
        let _ = writeln!(out, "epochs {}", c.epochs);
        let _ = writeln!(out, "batch_norm_after_first {}", c.batch_norm_after_first);
        for p in &self.params {
            write_tensor(&mut out, &p.name, &p.value);
        }
        let as_row = |v: &Array1<f64>| v.clone().insert_axis(ndarray::Axis(0));
        write_tensor(&mut out, "bn.running_mean", &as_row(&self.running_mean));
        write_tensor(&mut out, "bn.running_var", &as_row(&self.running_var));
        out.push_str("end\n");
        out
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Model> {
        let bad = |line: usize, msg: String| Error::Checkpoint(format!("line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("unexpected end of file, expected {what}")))
        };

        let (i, header) = next("header")?;
        match header.split_once(' ') {
            Some((MAGIC, v)) if v.trim() == CHECKPOINT_FORMAT_VERSION.to_string() => {}
            _ => return Err(bad(i, format!("unsupported header `{header}`"))),
        }
        let mut field = |key: &str| -> Result<String> {
            let (i, line) = next(key)?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(bad(i, format!("expected `{key} <value>`, found `{line}`"))),
            }
        };
        fn parse<T: std::str::FromStr>(key: &str, v: String) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Checkpoint(format!("invalid value `{v}` for {key}")))
        }
        let kind = parse("kind", field("kind")?)?;
        let input_dim: usize = parse("input_dim", field("input_dim")?)?;
        let config = ModelConfig {
            kind,
            hidden_dim: parse("hidden_dim", field("hidden_dim")?)?,
            num_layers: parse("num_layers", field("num_layers")?)?,
            num_classes: parse("num_classes", field("num_classes")?)?,
            dropout: parse("dropout", field("dropout")?)?,
            learning_rate: parse("learning_rate", field("learning_rate")?)?,
            epochs: parse("epochs", field("epochs")?)?,
            batch_norm_after_first: parse("batch_norm_after_first", field("batch_norm_after_first")?)?,
        };
        let mut model = Model::new(config, input_dim, &mut StreamRng::seed_from_u64(0))?;

        let mut read_tensor = |expected: &str, rows: usize, cols: usize| -> Result<Array2<f64>> {
            let (i, line) = next(expected)?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let shape_ok = parts.len() == 4
                && parts[0] == "tensor"
                && parts[1] == expected
                && parts[2].parse() == Ok(rows)
                && parts[3].parse() == Ok(cols);
            if !shape_ok {
                return Err(bad(
                    i,
                    format!("expected `tensor {expected} {rows} {cols}`, found `{line}`"),
                ));
            }
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (i, line) = next(expected)?;
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad(i, format!("invalid number `{t}`"))))
                    .collect::<Result<_>>()?;
                if row.len() != cols {
                    return Err(bad(i, format!("expected {cols} values, found {}", row.len())));
                }
                values.extend(row);
            }
            Ok(Array2::from_shape_vec((rows, cols), values).expect("shape checked"))
        };
        for p in model.params.iter_mut() {
            let (rows, cols) = p.value.dim();
            p.value = read_tensor(&p.name, rows, cols)?;
        }
        let hidden = model.config.hidden_dim;
        model.running_mean = read_tensor("bn.running_mean", 1, hidden)?.row(0).to_owned();
        model.running_var = read_tensor("bn.running_var", 1, hidden)?.row(0).to_owned();
        match next("end")? {
            (_, "end") => Ok(model),
            (i, other) => Err(bad(i, format!("expected `end`, found `{other}`"))),
        }
    }
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_checkpoint_string())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    Model::from_checkpoint_str(&std::fs::read_to_string(path)?)
}
