//! JSON outcome reports and delimiter-separated artifact writers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::altsol::PenaltyParams;
use crate::baselines::IterTrace;
use crate::bounds::BoundContext;
use crate::data::Dataset;
use crate::diagnostics::{DiagnosticsReport, SignificanceConfig};
use crate::error::Result;
use crate::linalg::FitResult;
use crate::metrics::{residual_plot_data, ComparisonRow};
use crate::solver::{SolveOutcome, SolverConfig};

pub const SCHEMA_VERSION: &str = "regsel-report/1";

/// JSON schema for [`OutcomeReport`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub columns: Vec<usize>,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub sse: f64,
    pub mse: f64,
    pub adjusted_r2: f64,
    pub dof: usize,
    pub rank: usize,
    pub diagnostics: DiagnosticsReport,
}

impl ModelReport {
    pub fn new(dataset: &Dataset, fit: &FitResult, diagnostics: &DiagnosticsReport) -> ModelReport {
        ModelReport {
            columns: fit.subset.clone(),
            names: fit
                .subset
                .iter()
                .map(|&j| dataset.column_name(j).to_string())
                .collect(),
            coefficients: fit.coefficients.clone(),
            std_errors: fit.std_errors.clone(),
            sse: fit.sse,
            mse: fit.mse,
            adjusted_r2: fit.adjusted_r2(),
            dof: fit.dof,
            rank: fit.rank,
            diagnostics: diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltReport {
    pub model: ModelReport,
    pub pi: usize,
    pub e: f64,
    pub r_l: f64,
    pub r_h: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub nodes_explored: usize,
    pub cuts_added: usize,
    pub candidates_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub significance: SignificanceConfig,
    pub penalty: PenaltyParams,
    pub bigm_samples: usize,
    pub bigm_safety: f64,
    pub seed: u64,
    pub time_limit: f64,
    pub threads: usize,
}

impl Parameters {
    pub fn from_config(cfg: &SolverConfig) -> Parameters {
        Parameters {
            significance: cfg.significance,
            penalty: cfg.penalty,
            bigm_samples: cfg.big_m.num_samples,
            bigm_safety: cfg.big_m.safety,
            seed: cfg.big_m.seed,
            time_limit: cfg.time_limit.as_secs_f64(),
            threads: cfg.threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub schema: String,
    pub dataset: String,
    pub response: String,
    pub n: usize,
    pub m: usize,
    pub method: String,
    pub k: usize,
    pub status: String,
    pub solution: Option<ModelReport>,
    pub alternative: Option<AltReport>,
    pub counters: Counters,
    pub cut_pool: Vec<Vec<String>>,
    pub bounds: Option<BoundContext>,
    pub iterations: Option<IterTrace>,
    pub parameters: Parameters,
    pub wall_time: f64,
}

impl OutcomeReport {
    pub fn new(
        dataset_id: &str,
        dataset: &Dataset,
        method: &str,
        k: usize,
        outcome: &SolveOutcome,
        trace: Option<&IterTrace>,
        cfg: &SolverConfig,
    ) -> OutcomeReport {
        let solution = match (&outcome.fit, &outcome.diagnostics) {
            (Some(fit), Some(diag)) => Some(ModelReport::new(dataset, fit, diag)),
            _ => None,
        };
        let alternative = outcome.alt.as_ref().map(|alt| AltReport {
            model: ModelReport::new(dataset, &alt.fit, &alt.diagnostics),
            pi: alt.candidate.pi,
            e: alt.candidate.e,
            r_l: alt.candidate.r_l,
            r_h: alt.candidate.r_h,
            q: alt.q,
        });
        OutcomeReport {
            schema: SCHEMA_VERSION.to_string(),
            dataset: dataset_id.to_string(),
            response: dataset.response_name().to_string(),
            n: dataset.n(),
            m: dataset.m(),
            method: method.to_string(),
            k,
            status: outcome.status.as_str().to_string(),
            solution,
            alternative,
            counters: Counters {
                nodes_explored: outcome.nodes_explored,
                cuts_added: outcome.cuts_added,
                candidates_evaluated: outcome.candidates_evaluated,
            },
            cut_pool: outcome.cut_pool.iter().map(|s| s.names(dataset)).collect(),
            bounds: outcome.bound_context,
            iterations: trace.cloned(),
            parameters: Parameters::from_config(cfg),
            wall_time: outcome.wall_time,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn write_residuals<W: Write>(sink: W, fit: &FitResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for row in residual_plot_data(fit) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const COMPARISON_HEADER: [&str; 12] = [
    "dataset",
    "k",
    "method",
    "status",
    "feasible",
    "adjusted_r2",
    "rep",
    "pi",
    "e",
    "r_l",
    "r_h",
    "wall_time",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Appends rows; the header is written only when `with_header` is set.
pub fn write_comparison_rows<W: Write>(
    sink: W,
    rows: &[ComparisonRow],
    with_header: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    if with_header {
        w.write_record(COMPARISON_HEADER)?;
    }
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.k.to_string(),
            r.method.clone(),
            r.status.as_str().to_string(),
            r.feasible.to_string(),
            opt(r.adjusted_r2),
            opt(r.rep),
            opt(r.pi),
            opt(r.e),
            opt(r.r_l),
            opt(r.r_h),
            r.wall_time.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
