//! Rényi-DP accounting for the subsampled Laplace mechanism.
//!
//! Every function here is pure. Privacy losses are in nats.
//!
//! The per-query mechanism releases a posterior (L1 norm 1) through additive
//! Laplace noise of scale β. Its RDP curve is amplified by Poisson
//! subsampling with rate γ, composed over |Q| queries, and converted to an
//! (ε, δ) guarantee by minimising over an integer order grid.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default upper end of the integer order grid `{2, ..., 32}`.
pub const DEFAULT_ALPHA_MAX: u32 = 32;

/// Sensitivity of a noisy vote histogram when one record moves one teacher's vote.
pub const PATE_SENSITIVITY: f64 = 2.0;

/// RDP curve evaluated on a strictly increasing grid of integer orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpCurve {
    orders: Vec<u32>,
    epsilons: Vec<f64>,
}

impl RdpCurve {
    pub fn new(orders: Vec<u32>, epsilons: Vec<f64>) -> Result<Self> {
        if orders.len() != epsilons.len() {
            return Err(domain(format!(
                "curve has {} orders but {} epsilons",
                orders.len(),
                epsilons.len()
            )));
        }
        if orders.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if orders.iter().any(|&a| a < 2) {
            return Err(domain("RDP orders must be integers >= 2"));
        }
        if orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("RDP orders must be strictly increasing"));
        }
        if let Some(e) = epsilons.iter().find(|e| !e.is_finite() || **e < 0.0) {
            return Err(domain(format!("RDP epsilon {e} is not finite and non-negative")));
        }
        Ok(Self { orders, epsilons })
    }

    /// Evaluates `f` at every order in `orders`.
    pub fn from_fn<F>(orders: impl IntoIterator<Item = u32>, mut f: F) -> Result<Self>
    where
        F: FnMut(u32) -> Result<f64>,
    {
        let orders: Vec<u32> = orders.into_iter().collect();
        let epsilons = orders.iter().map(|&a| f(a)).collect::<Result<Vec<_>>>()?;
        Self::new(orders, epsilons)
    }

    /// Curve that is zero on `{2, ..., alpha_max}`.
    pub fn zero(alpha_max: u32) -> Result<Self> {
        Self::from_fn(order_grid(alpha_max)?, |_| Ok(0.0))
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn get(&self, alpha: u32) -> Option<f64> {
        self.orders.binary_search(&alpha).ok().map(|i| self.epsilons[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.orders.iter().copied().zip(self.epsilons.iter().copied())
    }
}

/// Integer orders `{2, ..., alpha_max}`.
pub fn order_grid(alpha_max: u32) -> Result<std::ops::RangeInclusive<u32>> {
    if alpha_max < 2 {
        return Err(domain(format!("alpha_max must be >= 2, got {alpha_max}")));
    }
    Ok(2..=alpha_max)
}

/// Converts a real order to an integer one, rejecting fractional values.
pub fn integer_order(alpha: f64) -> Result<u32> {
    if !alpha.is_finite() || alpha.fract() != 0.0 || alpha < 2.0 || alpha > u32::MAX as f64 {
        return Err(domain(format!("order {alpha} is not an integer >= 2")));
    }
    Ok(alpha as u32)
}

/// How an RDP curve is converted to (ε, δ)-DP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conversion {
    /// `ε(δ) = min_α ε(α) + log(1/δ)/(α−1)`.
    #[default]
    Lemma,
    /// `ε(δ) = min_α ε(α−1) + log(1/δ)/(α−1)`: the curve point at order `a`
    /// is paired with conversion order `a + 1`.
    Shifted,
}

impl std::str::FromStr for Conversion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma" => Ok(Self::Lemma),
            "shifted" => Ok(Self::Shifted),
            other => Err(Error::Config(format!("unknown conversion `{other}`"))),
        }
    }
}

/// Accountant knobs shared by the PrivGNN and PATE budget functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccountantOptions {
    pub alpha_max: u32,
    pub conversion: Conversion,
}

impl Default for AccountantOptions {
    fn default() -> Self {
        Self {
            alpha_max: DEFAULT_ALPHA_MAX,
            conversion: Conversion::Shifted,
        }
    }
}

impl AccountantOptions {
    pub fn pate_default() -> Self {
        Self {
            alpha_max: DEFAULT_ALPHA_MAX,
            conversion: Conversion::Lemma,
        }
    }

    /// Orders at which the composed curve must be evaluated so that the
    /// conversion orders span `{.., alpha_max}`.
    pub fn curve_orders(&self) -> Result<std::ops::RangeInclusive<u32>> {
        match self.conversion {
            Conversion::Lemma => order_grid(self.alpha_max),
            Conversion::Shifted => {
                if self.alpha_max < 3 {
                    return Err(domain("shifted conversion needs alpha_max >= 3"));
                }
                order_grid(self.alpha_max - 1)
            }
        }
    }
}

/// Inputs of the PrivGNN budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyParams {
    /// Poisson sampling probability γ.
    pub gamma: f64,
    /// Inverse Laplace scale λ = 1/β.
    pub lambda: f64,
    /// Number of answered queries |Q|.
    pub num_queries: u64,
    pub delta: f64,
}

impl Default for PrivacyParams {
    /// γ = 0.3, λ = 0.1, |Q| = 500, δ = 1e-4.
    fn default() -> Self {
        Self {
            gamma: 0.3,
            lambda: 0.1,
            num_queries: 500,
            delta: 1e-4,
        }
    }
}

impl PrivacyParams {
    pub fn new(gamma: f64, lambda: f64, num_queries: u64, delta: f64) -> Result<Self> {
        let params = Self {
            gamma,
            lambda,
            num_queries,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        let beta = self.beta();
        if !(beta.is_finite() && beta > 0.0) {
            return Err(domain(format!("beta = 1/lambda = {beta} is not finite")));
        }
        check_delta(self.delta)
    }

    /// Laplace scale β = 1/λ.
    pub fn beta(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Warning text when δ is not below one over the private node count.
    pub fn delta_warning(&self, num_private_nodes: usize) -> Option<String> {
        if num_private_nodes > 0 && self.delta >= 1.0 / num_private_nodes as f64 {
            Some(format!(
                "delta = {} is not below 1/|V_priv| = {:.3e}",
                self.delta,
                1.0 / num_private_nodes as f64
            ))
        } else {
            None
        }
    }
}

/// An (ε, δ)-DP guarantee and the order at which it was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpGuarantee {
    pub epsilon: f64,
    pub delta: f64,
    pub optimal_order: u32,
}

/// Tight (grid-optimised) and crude (closed-form) PrivGNN budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub tight: DpGuarantee,
    pub crude: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(domain(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// `ln(e^a + e^b)`, exact when either side is `-inf`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let tail: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + tail.ln()
}

/// `k * ln_x` with the convention `0 * ln 0 = 0`.
fn scaled_log(k: f64, ln_x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * ln_x
    }
}

/// `ln C(n, k)`; exact integer arithmetic while it fits in `u128`.
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut exact: u128 = 1;
    for i in 1..=k as u128 {
        match exact.checked_mul(n as u128 - k as u128 + i) {
            Some(v) => exact = v / i,
            None => {
                return (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
            }
        }
    }
    (exact as f64).ln()
}

/// `e^{(α−1) ε_Lap(α)} − 1`, or `None` when the exponentials overflow.
fn laplace_excess_mass(alpha: f64, beta: f64) -> Option<f64> {
    let up = (alpha - 1.0) / beta;
    if up > 700.0 {
        return None;
    }
    let down = -alpha / beta;
    let w_up = alpha / (2.0 * alpha - 1.0);
    let w_down = (alpha - 1.0) / (2.0 * alpha - 1.0);
    Some(w_up * up.exp_m1() + w_down * down.exp_m1())
}

/// `(α−1) ε_Lap(α)` computed in log space.
fn laplace_log_moment(alpha: f64, beta: f64) -> f64 {
    match laplace_excess_mass(alpha, beta) {
        Some(mass) => mass.ln_1p(),
        None => {
            let w_up = (alpha / (2.0 * alpha - 1.0)).ln();
            let w_down = ((alpha - 1.0) / (2.0 * alpha - 1.0)).ln();
            log_add_exp(w_up + (alpha - 1.0) / beta, w_down - alpha / beta)
        }
    }
}

/// RDP of the sensitivity-1 Laplace mechanism with scale `beta` at real order `alpha > 1`.
pub fn laplace_rdp(alpha: f64, beta: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(domain(format!("order must be > 1, got {alpha}")));
    }
    check_beta(beta)?;
    let value = laplace_log_moment(alpha, beta) / (alpha - 1.0);
    Ok(value.max(0.0))
}

/// Laplace RDP for a query of L1 sensitivity `sensitivity`: scale `beta / sensitivity`.
pub fn laplace_rdp_with_sensitivity(alpha: f64, beta: f64, sensitivity: f64) -> Result<f64> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(domain(format!("sensitivity must be positive, got {sensitivity}")));
    }
    check_beta(beta)?;
    laplace_rdp(alpha, beta / sensitivity)
}

/// Closed form of the Poisson-subsampled Laplace RDP at order 2:
/// `log(1 − γ² + γ² e^{ε_Lap(2)})`.
pub fn subsampled_laplace_rdp_order2(gamma: f64, beta: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_beta(beta)?;
    let gamma_sq = gamma * gamma;
    let value = match laplace_excess_mass(2.0, beta) {
        Some(mass) => (gamma_sq * mass).ln_1p(),
        None => log_add_exp((-gamma_sq).ln_1p(), gamma_sq.ln() + laplace_log_moment(2.0, beta)),
    };
    Ok(value.max(0.0))
}

/// Poisson-subsampled Laplace RDP at integer order `alpha >= 2`.
///
/// Order 2 uses the closed form; higher orders evaluate the general upper
/// bound series (see [`subsampled_laplace_rdp_series`]).
pub fn subsampled_laplace_rdp(alpha: u32, gamma: f64, beta: f64) -> Result<f64> {
    if alpha == 2 {
        subsampled_laplace_rdp_order2(gamma, beta)
    } else {
        subsampled_laplace_rdp_series(alpha, gamma, beta)
    }
}

/// The general Poisson-subsampling RDP upper bound, evaluated term by term
/// with log-sum-exp:
///
/// ```text
/// 1/(α−1) · log{ (1−γ)^{α−1}(αγ−γ+1) + C(α,2) γ² (1−γ)^{α−2} e^{ε(2)}
///                + 3 Σ_{ℓ=3..α} C(α,ℓ) (1−γ)^{α−ℓ} γ^ℓ e^{(ℓ−1)ε(ℓ)} }
/// ```
///
/// with `ε(ℓ)` the Laplace RDP at scale `beta`.
pub fn subsampled_laplace_rdp_series(alpha: u32, gamma: f64, beta: f64) -> Result<f64> {
    if alpha < 2 {
        return Err(domain(format!("order must be an integer >= 2, got {alpha}")));
    }
    check_gamma(gamma)?;
    check_beta(beta)?;
    let a = alpha as f64;
    let ln_gamma = gamma.ln();
    let ln_keep = (-gamma).ln_1p();

    let mut terms = Vec::with_capacity(alpha as usize);
    terms.push(scaled_log(a - 1.0, ln_keep) + ((a - 1.0) * gamma).ln_1p());
    terms.push(
        ln_binomial(alpha, 2)
            + scaled_log(2.0, ln_gamma)
            + scaled_log(a - 2.0, ln_keep)
            + laplace_log_moment(2.0, beta),
    );
    let ln3 = 3f64.ln();
    for l in 3..=alpha {
        let lf = l as f64;
        terms.push(
            ln3 + ln_binomial(alpha, l)
                + scaled_log(lf, ln_gamma)
                + scaled_log(a - lf, ln_keep)
                + laplace_log_moment(lf, beta),
        );
    }
    Ok((log_sum_exp(&terms) / (a - 1.0)).max(0.0))
}

/// n-fold self-composition: every ε(α) multiplied by `n`.
pub fn compose(curve: &RdpCurve, n: u64) -> RdpCurve {
    let factor = n as f64;
    RdpCurve {
        orders: curve.orders.clone(),
        epsilons: curve.epsilons.iter().map(|e| factor * e).collect(),
    }
}

/// Heterogeneous composition: pointwise sum on the common orders.
pub fn compose_pair(a: &RdpCurve, b: &RdpCurve) -> Result<RdpCurve> {
    let mut orders = Vec::new();
    let mut epsilons = Vec::new();
    for (alpha, ea) in a.iter() {
        if let Some(eb) = b.get(alpha) {
            orders.push(alpha);
            epsilons.push(ea + eb);
        }
    }
    if orders.is_empty() {
        return Err(Error::EmptyGrid);
    }
    RdpCurve::new(orders, epsilons)
}

/// One row of a conversion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionRow {
    /// Conversion order α (the `1/(α−1)` term).
    pub alpha: u32,
    /// Curve value paired with `alpha`.
    pub rdp_eps: f64,
    pub converted_eps: f64,
}

/// Converted ε at every order the curve supports.
pub fn conversion_table(curve: &RdpCurve, delta: f64, conversion: Conversion) -> Result<Vec<ConversionRow>> {
    check_delta(delta)?;
    if curve.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let log_inv_delta = -delta.ln();
    Ok(curve
        .iter()
        .map(|(order, eps)| {
            let alpha = match conversion {
                Conversion::Lemma => order,
                Conversion::Shifted => order + 1,
            };
            ConversionRow {
                alpha,
                rdp_eps: eps,
                converted_eps: eps + log_inv_delta / (alpha - 1) as f64,
            }
        })
        .collect())
}

/// Lemma-indexed conversion to (ε, δ)-DP, minimised over the curve's orders.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<DpGuarantee> {
    rdp_to_dp_with(curve, delta, Conversion::Lemma)
}

/// Conversion to (ε, δ)-DP with an explicit indexing. Ties go to the smallest order.
pub fn rdp_to_dp_with(curve: &RdpCurve, delta: f64, conversion: Conversion) -> Result<DpGuarantee> {
    let rows = conversion_table(curve, delta, conversion)?;
    let best = rows
        .iter()
        .copied()
        .reduce(|best, row| {
            if row.converted_eps < best.converted_eps {
                row
            } else {
                best
            }
        })
        .ok_or(Error::EmptyGrid)?;
    Ok(DpGuarantee {
        epsilon: best.converted_eps,
        delta,
        optimal_order: best.alpha,
    })
}

/// Per-query subsampled Laplace curve on the orders required by `options`.
pub fn privgnn_query_curve(gamma: f64, beta: f64, options: &AccountantOptions) -> Result<RdpCurve> {
    RdpCurve::from_fn(options.curve_orders()?, |a| subsampled_laplace_rdp(a, gamma, beta))
}

/// Composed PrivGNN curve over all queries.
pub fn privgnn_curve(params: &PrivacyParams, options: &AccountantOptions) -> Result<RdpCurve> {
    params.validate()?;
    let per_query = privgnn_query_curve(params.gamma, params.beta(), options)?;
    Ok(compose(&per_query, params.num_queries))
}

/// Closed-form rough upper bound
/// `log(1/√δ) + |Q| log(1 + γ²((2/3)e^{1/β} + (1/3)e^{−2/β} − 1))`.
pub fn crude_bound(params: &PrivacyParams) -> Result<f64> {
    params.validate()?;
    let per_query = subsampled_laplace_rdp_order2(params.gamma, params.beta())?;
    Ok(0.5 * -params.delta.ln() + params.num_queries as f64 * per_query)
}

/// PrivGNN budget with the default grid `{2..32}` and shifted conversion.
pub fn privgnn_budget(params: &PrivacyParams) -> Result<Budget> {
    privgnn_budget_with(params, &AccountantOptions::default())
}

pub fn privgnn_budget_with(params: &PrivacyParams, options: &AccountantOptions) -> Result<Budget> {
    let curve = privgnn_curve(params, options)?;
    let tight = rdp_to_dp_with(&curve, params.delta, options.conversion)?;
    Ok(Budget {
        tight,
        crude: crude_bound(params)?,
    })
}

/// Composed curve of the PATE noisy vote histogram (sensitivity 2).
pub fn pate_curve(lambda: f64, num_queries: u64, options: &AccountantOptions) -> Result<RdpCurve> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("lambda must be positive, got {lambda}")));
    }
    let beta = 1.0 / lambda;
    let per_query = RdpCurve::from_fn(options.curve_orders()?, |a| {
        laplace_rdp_with_sensitivity(a as f64, beta, PATE_SENSITIVITY)
    })?;
    Ok(compose(&per_query, num_queries))
}

/// PATE budget over `{2..32}` with Lemma-indexed conversion.
pub fn pate_budget(lambda: f64, num_queries: u64, delta: f64) -> Result<DpGuarantee> {
    pate_budget_with(lambda, num_queries, delta, &AccountantOptions::pate_default())
}

pub fn pate_budget_with(lambda: f64, num_queries: u64, delta: f64, options: &AccountantOptions) -> Result<DpGuarantee> {
    check_delta(delta)?;
    let curve = pate_curve(lambda, num_queries, options)?;
    rdp_to_dp_with(&curve, delta, options.conversion)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Frozen from a 50-digit mpmath evaluation of the closed forms.
    const LAP_2_10: f64 = 0.009_644_207_840_344_674_7;
    const SUB_2_03_10: f64 = 0.000_871_797_550_937_140_67;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn laplace_rdp_reference_values() {
        assert!(close(laplace_rdp(2.0, 10.0).unwrap(), LAP_2_10, 1e-13));
        assert!(laplace_rdp(2.0, 1e9).unwrap() <= 1e-8);
        assert!((laplace_rdp(1e6, 1.0).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn laplace_rdp_rejects_bad_domain() {
        assert!(laplace_rdp(1.0, 1.0).is_err());
        assert!(laplace_rdp(0.5, 1.0).is_err());
        assert!(laplace_rdp(2.0, 0.0).is_err());
        assert!(laplace_rdp(2.0, -3.0).is_err());
        assert!(laplace_rdp(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn large_order_and_small_scale_do_not_overflow() {
        let v = laplace_rdp(64.0, 0.01).unwrap();
        assert!(v.is_finite() && v <= 100.0 + 1e-9);
        let s = subsampled_laplace_rdp(64, 0.3, 0.01).unwrap();
        assert!(s.is_finite());
        let s2 = subsampled_laplace_rdp(2, 0.3, 1e-3).unwrap();
        assert!(s2.is_finite() && s2 > 0.0);
    }

    #[test]
    fn sensitivity_rescales_beta() {
        let a = laplace_rdp_with_sensitivity(3.0, 10.0, 2.0).unwrap();
        let b = laplace_rdp(3.0, 5.0).unwrap();
        assert_eq!(a, b);
        assert!(laplace_rdp_with_sensitivity(3.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn subsampled_reference_values() {
        assert_eq!(subsampled_laplace_rdp(2, 0.0, 10.0).unwrap(), 0.0);
        assert_eq!(
            subsampled_laplace_rdp(2, 1.0, 10.0).unwrap(),
            laplace_rdp(2.0, 10.0).unwrap()
        );
        assert!(close(subsampled_laplace_rdp(2, 0.3, 10.0).unwrap(), SUB_2_03_10, 1e-12));
    }

    #[test]
    fn series_matches_closed_form_at_order_two() {
        for &gamma in &[0.0, 0.05, 0.3, 0.7, 1.0] {
            for &beta in &[0.5, 1.0, 5.0, 10.0, 100.0] {
                let closed = subsampled_laplace_rdp_order2(gamma, beta).unwrap();
                let series = subsampled_laplace_rdp_series(2, gamma, beta).unwrap();
                assert!(
                    (closed - series).abs() <= 1e-10 * closed.max(1e-12),
                    "gamma={gamma} beta={beta}: {closed} vs {series}"
                );
            }
        }
    }

    #[test]
    fn subsampled_rejects_bad_domain() {
        assert!(subsampled_laplace_rdp(1, 0.3, 1.0).is_err());
        assert!(subsampled_laplace_rdp(3, -0.1, 1.0).is_err());
        assert!(subsampled_laplace_rdp(3, 1.1, 1.0).is_err());
        assert!(integer_order(2.5).is_err());
        assert!(integer_order(1.0).is_err());
        assert_eq!(integer_order(7.0).unwrap(), 7);
    }

    #[test]
    fn ln_binomial_is_exact_for_small_arguments() {
        assert_eq!(ln_binomial(5, 2), 10f64.ln());
        assert_eq!(ln_binomial(64, 32), (1_832_624_140_942_590_534u128 as f64).ln());
        assert_eq!(ln_binomial(3, 5), f64::NEG_INFINITY);
        let big = ln_binomial(200, 100);
        assert!((big - 135.753_236_081_278_5).abs() < 1e-9);
    }

    #[test]
    fn compose_identities() {
        let c = RdpCurve::new(vec![2, 3, 5], vec![0.1, 0.2, 0.4]).unwrap();
        assert_eq!(compose(&c, 1), c);
        let doubled = compose(&c, 2);
        for ((_, a), (_, b)) in c.iter().zip(doubled.iter()) {
            assert_eq!(b, 2.0 * a);
        }
        let d = RdpCurve::new(vec![3, 4, 5], vec![1.0, 1.0, 1.0]).unwrap();
        let sum = compose_pair(&c, &d).unwrap();
        assert_eq!(sum.orders(), &[3, 5]);
        assert_eq!(sum.epsilons(), &[1.2, 1.4]);
        let e = RdpCurve::new(vec![7], vec![0.0]).unwrap();
        assert!(matches!(compose_pair(&c, &e), Err(Error::EmptyGrid)));
    }

    #[test]
    fn curve_validation() {
        assert!(RdpCurve::new(vec![], vec![]).is_err());
        assert!(RdpCurve::new(vec![3, 2], vec![0.0, 0.0]).is_err());
        assert!(RdpCurve::new(vec![2, 3], vec![0.0]).is_err());
        assert!(RdpCurve::new(vec![2], vec![-1.0]).is_err());
        assert!(RdpCurve::new(vec![2], vec![f64::INFINITY]).is_err());
        assert!(RdpCurve::new(vec![1], vec![0.0]).is_err());
    }

    #[test]
    fn conversion_examples() {
        let single = RdpCurve::new(vec![2], vec![0.0]).unwrap();
        let g = rdp_to_dp(&single, (-1f64).exp()).unwrap();
        assert!((g.epsilon - 1.0).abs() < 1e-15);
        assert_eq!(g.optimal_order, 2);

        let zero = RdpCurve::zero(32).unwrap();
        let g = rdp_to_dp(&zero, 1e-4).unwrap();
        assert_eq!(g.optimal_order, 32);
        assert_eq!(g.epsilon, -(1e-4f64).ln() / 31.0);
        assert!((g.epsilon - 0.297_107).abs() < 1e-6);

        assert!(rdp_to_dp(&zero, 0.0).is_err());
        assert!(rdp_to_dp(&zero, 1.0).is_err());
    }

    #[test]
    fn shifted_conversion_pairs_point_with_next_order() {
        let c = RdpCurve::new(vec![2], vec![0.5]).unwrap();
        let g = rdp_to_dp_with(&c, (-1f64).exp(), Conversion::Shifted).unwrap();
        assert_eq!(g.optimal_order, 3);
        assert!((g.epsilon - 1.0).abs() < 1e-15);
    }

    #[test]
    fn privgnn_budget_reference_tuple() {
        let p = PrivacyParams::new(0.3, 0.1, 500, 1e-4).unwrap();
        let b = privgnn_budget(&p).unwrap();
        // Frozen from the mpmath oracle of the closed form.
        assert!(close(b.crude, 5.041_068_961_456_662, 1e-12));
        assert!(b.tight.epsilon <= b.crude);
        assert_eq!(b.tight.optimal_order, 3);

        let zero = PrivacyParams::new(0.3, 0.1, 0, 1e-4).unwrap();
        let b = privgnn_budget(&zero).unwrap();
        assert_eq!(b.crude, 0.5 * -(1e-4f64).ln());
        assert_eq!(b.tight.epsilon, -(1e-4f64).ln() / 31.0);
        assert_eq!(b.tight.optimal_order, 32);
    }

    #[test]
    fn lemma_indexing_is_available_for_comparison() {
        let p = PrivacyParams::new(0.3, 0.1, 500, 1e-4).unwrap();
        let opts = AccountantOptions {
            alpha_max: 32,
            conversion: Conversion::Lemma,
        };
        let b = privgnn_budget_with(&p, &opts).unwrap();
        // Frozen from the mpmath oracle: α=2 wins with 500·ε_sub(2) + ln(1e4).
        assert!(close(b.tight.epsilon, 9.646_239_147_444_753, 1e-12));
        assert_eq!(b.tight.optimal_order, 2);
    }

    #[test]
    fn pate_budget_examples() {
        let g = pate_budget(0.1, 500, 1e-4).unwrap();
        assert!(close(g.epsilon, 27.717_808_780_791_866, 1e-12));
        assert_eq!(g.optimal_order, 2);

        let tiny = pate_budget(1e-9, 500, 1e-4).unwrap();
        assert!((tiny.epsilon - -(1e-4f64).ln() / 31.0).abs() < 1e-6);

        let single = pate_budget(0.1, 1, 1.0 - 1e-12).unwrap();
        let per_query = laplace_rdp_with_sensitivity(2.0, 10.0, 2.0).unwrap();
        assert!((single.epsilon - per_query).abs() < 1e-9);
    }

    #[test]
    fn privacy_params_validation() {
        assert!(PrivacyParams::new(1.5, 0.1, 10, 1e-4).is_err());
        assert!(PrivacyParams::new(0.3, 0.0, 10, 1e-4).is_err());
        assert!(PrivacyParams::new(0.3, 1e-320, 10, 1e-4).is_err());
        assert!(PrivacyParams::new(0.3, 0.1, 10, 1.0).is_err());
        let p = PrivacyParams::new(0.3, 0.1, 10, 1e-3).unwrap();
        assert!(p.delta_warning(2500).is_some());
        assert!(p.delta_warning(500).is_none());
    }
}
