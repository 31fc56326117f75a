//! Side-by-side comparison of accounted budgets against published values.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sweep::SweepRow;
use crate::accountant::{privgnn_budget_with, AccountantOptions, PrivacyParams};
use crate::error::Result;

const REFERENCE_CSV: &str = include_str!("../../data/reference_budgets.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBudget {
    pub source: String,
    pub gamma: f64,
    pub lambda: f64,
    pub num_queries: u64,
    pub delta: f64,
    pub epsilon: f64,
}

impl ReferenceBudget {
    pub fn privacy(&self) -> PrivacyParams {
        PrivacyParams {
            gamma: self.gamma,
            lambda: self.lambda,
            num_queries: self.num_queries,
            delta: self.delta,
        }
    }

    fn matches(&self, row: &SweepRow) -> bool {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        same(self.gamma, row.gamma)
            && same(self.lambda, row.lambda)
            && same(self.delta, row.delta)
            && self.num_queries == row.query_count
    }
}

/// The embedded reference table.
pub fn reference_budgets() -> Result<Vec<ReferenceBudget>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(REFERENCE_CSV.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub source: String,
    pub gamma: f64,
    pub lambda: f64,
    pub num_queries: u64,
    pub delta: f64,
    pub ours_tight: Option<f64>,
    pub ours_alpha: Option<u32>,
    pub ours_crude: Option<f64>,
    pub reference: f64,
    pub ratio_tight: Option<f64>,
    pub ratio_crude: Option<f64>,
}

impl ComparisonRow {
    fn new(reference: &ReferenceBudget, tight: Option<(f64, u32)>, crude: Option<f64>) -> Self {
        Self {
            source: reference.source.clone(),
            gamma: reference.gamma,
            lambda: reference.lambda,
            num_queries: reference.num_queries,
            delta: reference.delta,
            ours_tight: tight.map(|t| t.0),
            ours_alpha: tight.map(|t| t.1),
            ours_crude: crude,
            reference: reference.epsilon,
            ratio_tight: tight.map(|t| t.0 / reference.epsilon),
            ratio_crude: crude.map(|c| c / reference.epsilon),
        }
    }
}

pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Reference tuples absent from the report.
    pub missing: Vec<ReferenceBudget>,
}

/// Matches sweep rows to reference tuples; unmatched tuples are listed as missing.
pub fn compare_to_reference(report: &[SweepRow]) -> Result<Comparison> {
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for reference in reference_budgets()? {
        match report.iter().find(|r| reference.matches(r) && r.epsilon.is_some()) {
            Some(r) => rows.push(ComparisonRow::new(
                &reference,
                r.epsilon.zip(r.optimal_alpha),
                r.crude_epsilon,
            )),
            None => missing.push(reference),
        }
    }
    Ok(Comparison { rows, missing })
}

/// Evaluates the accountant directly on every reference tuple.
pub fn compare_with_accountant(options: &AccountantOptions) -> Result<Vec<ComparisonRow>> {
    reference_budgets()?
        .iter()
        .map(|reference| {
            let b = privgnn_budget_with(&reference.privacy(), options)?;
            Ok(ComparisonRow::new(
                reference,
                Some((b.tight.epsilon, b.tight.optimal_order)),
                Some(b.crude),
            ))
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
