//! Relative explanatory power, status tallies, and residual-plot data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::FitResult;
use crate::solver::{SolveOutcome, Status};

/// Ratio of adjusted R² values; undefined unless the base value is positive.
pub fn rep(method_adj_r2: f64, base_adj_r2: f64) -> Option<f64> {
    (base_adj_r2 > 0.0).then(|| method_adj_r2 / base_adj_r2)
}

/// REP of the subset an outcome reports (solution or alternative) against the
/// base outcome of the same dataset and k.
pub fn rep_outcomes(method: &SolveOutcome, base: &SolveOutcome) -> Option<f64> {
    let m = method.selected_fit()?.adjusted_r2();
    let b = base.selected_fit()?.adjusted_r2();
    rep(m, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub k: usize,
    pub method: String,
    pub status: Status,
    pub feasible: bool,
    pub adjusted_r2: Option<f64>,
    pub rep: Option<f64>,
    pub pi: Option<usize>,
    pub e: Option<f64>,
    pub r_l: Option<f64>,
    pub r_h: Option<f64>,
    pub wall_time: f64,
}

impl ComparisonRow {
    pub fn from_outcome(
        dataset: &str,
        k: usize,
        method: &str,
        outcome: &SolveOutcome,
        base: Option<&SolveOutcome>,
    ) -> ComparisonRow {
        let fit = outcome.selected_fit();
        let diag = outcome.selected_diagnostics();
        ComparisonRow {
            dataset: dataset.to_string(),
            k,
            method: method.to_string(),
            status: outcome.status,
            feasible: outcome.status.is_feasible(),
            adjusted_r2: fit.map(|f| f.adjusted_r2()),
            rep: base.and_then(|b| rep_outcomes(outcome, b)),
            pi: diag.map(|d| d.pi),
            e: diag.map(|d| d.e),
            r_l: diag.map(|d| d.r_l),
            r_h: diag.map(|d| d.r_h),
            wall_time: outcome.wall_time,
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Mean REP over rows where it is defined.
pub fn rep_mean(rows: &[ComparisonRow]) -> Option<f64> {
    mean(rows.iter().filter_map(|r| r.rep))
}

/// Mean REP over rows with a feasible solution.
pub fn rep_feas(rows: &[ComparisonRow]) -> Option<f64> {
    mean(rows.iter().filter(|r| r.feasible).filter_map(|r| r.rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub group: String,
    pub method: String,
    pub cases: usize,
    pub feasible: usize,
    pub rep: Option<f64>,
    pub rep_feas: Option<f64>,
    pub statuses: BTreeMap<String, usize>,
    pub mean_wall_time: f64,
}

fn summarize(rows: &[ComparisonRow], key: impl Fn(&ComparisonRow) -> String) -> Vec<Summary> {
    let mut groups: BTreeMap<(String, String), Vec<ComparisonRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((key(row), row.method.clone()))
            .or_default()
            .push(row.clone());
    }
    groups
        .into_iter()
        .map(|((group, method), rows)| {
            let mut statuses = BTreeMap::new();
            for r in &rows {
                *statuses.entry(r.status.as_str().to_string()).or_insert(0) += 1;
            }
            Summary {
                group,
                method,
                cases: rows.len(),
                feasible: rows.iter().filter(|r| r.feasible).count(),
                rep: rep_mean(&rows),
                rep_feas: rep_feas(&rows),
                statuses,
                mean_wall_time: mean(rows.iter().map(|r| r.wall_time)).unwrap_or(0.0),
            }
        })
        .collect()
}

pub fn summarize_by_dataset(rows: &[ComparisonRow]) -> Vec<Summary> {
    summarize(rows, |r| r.dataset.clone())
}

pub fn summarize_by_k(rows: &[ComparisonRow]) -> Vec<Summary> {
    summarize(rows, |r| r.k.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub fitted: f64,
    pub residual: f64,
    pub abs_residual: f64,
}

pub fn residual_plot_data(fit: &FitResult) -> Vec<ResidualRow> {
    fit.fitted
        .iter()
        .zip(&fit.residuals)
        .map(|(&fitted, &residual)| ResidualRow {
            fitted,
            residual,
            abs_residual: residual.abs(),
        })
        .collect()
}
