//! Dense kernels shared by the forward and backward passes.

use ndarray::{Array2, Axis};

use crate::graph::Graph;

/// Row `v` of the result is the mean of `h` over the neighbors of `v`;
/// isolated nodes get a zero row.
pub fn mean_aggregate(graph: &Graph, h: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for v in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let scale = 1.0 / nbrs.len() as f64;
        let mut row = out.row_mut(v);
        for &u in nbrs {
            row.scaled_add(scale, &h.row(u));
        }
    }
    out
}

/// Adjoint of [`mean_aggregate`]: scatters `g[v] / deg(v)` onto every neighbor of `v`.
pub fn mean_aggregate_adjoint(graph: &Graph, g: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(g.raw_dim());
    for v in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let scale = 1.0 / nbrs.len() as f64;
        for &u in nbrs {
            out.row_mut(u).scaled_add(scale, &g.row(v));
        }
    }
    out
}

pub fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|x| x - lse);
    }
    out
}

pub fn add_row_broadcast(z: &mut Array2<f64>, bias: &Array2<f64>) {
    debug_assert_eq!(bias.nrows(), 1);
    *z += &bias.row(0);
}
