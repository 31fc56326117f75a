//! Laplace noise and noisy arg-max labelling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gnn::argmax;

/// One draw from `Laplace(0, scale)` by inverse-CDF sampling.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// `argmax_i (scores_i + η_i)` with `η_i ~ Laplace(0, beta)` i.i.d.; ties go to the lowest index.
pub fn noisy_argmax<R: Rng + ?Sized>(scores: &[f64], beta: f64, rng: &mut R) -> Result<usize> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "noise scale must be positive and finite, got {beta}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::Domain("cannot label from an empty score vector".into()));
    }
    Ok(argmax(scores.iter().map(|s| s + sample_laplace(beta, rng))))
}

/// Noisy pseudo-label from a teacher posterior.
pub fn noisy_pseudo_label<R: Rng + ?Sized>(posterior: &[f64], beta: f64, rng: &mut R) -> Result<usize> {
    let total: f64 = posterior.iter().sum();
    if posterior.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!("posterior is not on the simplex (sum {total})")));
    }
    noisy_argmax(posterior, beta, rng)
}

/// Noisy label from a per-class vote histogram.
pub fn noisy_vote_label<R: Rng + ?Sized>(votes: &[u64], beta: f64, rng: &mut R) -> Result<usize> {
    let scores: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
    noisy_argmax(&scores, beta, rng)
}
