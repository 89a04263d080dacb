//! Comparison methods: greedy forward selection with pair exclusion and the
//! iterative cutting loop around the unconstrained solver.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::altsol::{penalty_q, AltCandidate};
use crate::bounds::bound_context;
use crate::data::Dataset;
use crate::diagnostics::{run_diagnostics, DiagnosticsReport, EnabledTests};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, ols_fit};
use crate::solver::{
    validate_request, with_threads, AltRecord, CandidateSubset, FitCache, Mode, Search, SolveOutcome,
    SolverConfig, Status,
};

/// One greedy step: the column added and the MSE of the fit after adding it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardStep {
    pub column: usize,
    pub sse: f64,
    pub mse: f64,
}

/// Greedy path of length k. Each step adds the pool column giving the
/// smallest MSE, then removes that column and its log partner from the pool.
pub fn forward_select_path(dataset: &Dataset, k: usize) -> Result<Vec<ForwardStep>> {
    if k == 0 || k > dataset.m() {
        return Err(Error::Config(format!(
            "k must lie in 1..={}, got {k}",
            dataset.m()
        )));
    }
    if dataset.n() < k + 2 {
        return Err(Error::DegreesOfFreedom { n: dataset.n(), k });
    }
    let mut pool: Vec<bool> = vec![true; dataset.n_columns()];
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut path = Vec::with_capacity(k);
    for step in 0..k {
        let dof = (dataset.n() - step - 2) as f64;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..dataset.n_columns()).filter(|&j| pool[j]) {
            let mut cols = chosen.clone();
            cols.push(j);
            let sse = least_squares(&dataset.submatrix(&cols), dataset.response()).sse;
            if best.is_none_or(|(_, s)| sse < s) {
                best = Some((j, sse));
            }
        }
        let (j, sse) = best.ok_or_else(|| {
            Error::InvalidArgument(format!("candidate pool exhausted after {step} columns"))
        })?;
        pool[j] = false;
        pool[dataset.pair(j)] = false;
        chosen.push(j);
        path.push(ForwardStep {
            column: j,
            sse,
            mse: sse / dof,
        });
    }
    Ok(path)
}

pub fn forward_select(dataset: &Dataset, k: usize) -> Result<CandidateSubset> {
    let path = forward_select_path(dataset, k)?;
    CandidateSubset::new(dataset, path.iter().map(|s| s.column).collect())
}

/// Forward selection packaged as an outcome. The greedy subset is reported
/// as the solution when it passes the enabled diagnostics, otherwise as the
/// alternative.
pub fn solve_forward(dataset: &Dataset, k: usize, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let subset = forward_select(dataset, k)?;
    let fit = ols_fit(dataset, subset.indices())?;
    let diagnostics = run_diagnostics(dataset, &fit, &cfg.significance, &cfg.tests);
    let mut outcome = SolveOutcome {
        status: Status::BestFeasible,
        subset: None,
        fit: None,
        diagnostics: None,
        alt: None,
        nodes_explored: 0,
        cuts_added: 0,
        candidates_evaluated: k * dataset.n_columns(),
        cut_pool: Vec::new(),
        bound_context: None,
        wall_time: 0.0,
    };
    if diagnostics.feasible {
        outcome.subset = Some(subset);
        outcome.fit = Some(fit);
        outcome.diagnostics = Some(diagnostics);
    } else {
        outcome.status = Status::Alternative;
        outcome.alt = Some(alt_record(fit, diagnostics, cfg));
    }
    outcome.wall_time = started.elapsed().as_secs_f64();
    Ok(outcome)
}

fn alt_record(
    fit: crate::linalg::FitResult,
    diagnostics: DiagnosticsReport,
    cfg: &SolverConfig,
) -> AltRecord {
    let candidate = AltCandidate::new(&fit, &diagnostics);
    let q = penalty_q(&candidate, &cfg.penalty, &cfg.significance);
    AltRecord {
        candidate,
        fit,
        diagnostics,
        q,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterStep {
    pub subset: CandidateSubset,
    pub sse: f64,
    pub diagnostics: DiagnosticsReport,
    pub cut_added: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterTrace {
    pub iterations: Vec<IterStep>,
    pub solver_calls: usize,
}

/// Repeatedly solves the unconstrained problem, cutting each returned subset
/// that has an insignificant coefficient, until a significant subset appears
/// or time runs out. Only coefficient t-tests are checked.
pub fn solve_iterative(
    dataset: &Dataset,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(SolveOutcome, IterTrace)> {
    validate_request(dataset, k, cfg)?;
    let started = Instant::now();
    let deadline = started + cfg.time_limit;
    let mut cfg = cfg.clone();
    cfg.tests = EnabledTests::coefficients_only();
    let cfg = &cfg;

    with_threads(cfg.threads, || -> Result<(SolveOutcome, IterTrace)> {
        let ctx = bound_context(dataset, k, &cfg.big_m, &cfg.significance, cfg.threads > 1)?;
        let mut excluded: HashSet<CandidateSubset> = HashSet::new();
        let mut cut_order: Vec<CandidateSubset> = Vec::new();
        let mut trace = IterTrace::default();
        let mut nodes = 0;
        let mut evaluated = 0;
        let mut last: Option<(crate::linalg::FitResult, DiagnosticsReport)> = None;
        let cache = FitCache::default();

        let status = loop {
            let result = Search::new(dataset, k, cfg, Mode::Base, None, &excluded, deadline)
                .with_cache(&cache)
                .run()?;
            trace.solver_calls += 1;
            nodes += result.nodes_explored;
            evaluated += result.candidates_evaluated;
            let Some(incumbent) = result.incumbent else {
                // every k-subset has been cut, or time ran out before any fit
                break if result.exhausted {
                    Status::InfeasibleWithAlternative
                } else {
                    Status::Alternative
                };
            };
            let (subset, fit, diagnostics) = incumbent.into_parts(dataset, cfg)?;
            if diagnostics.feasible {
                trace.iterations.push(IterStep {
                    subset: subset.clone(),
                    sse: fit.sse,
                    diagnostics: diagnostics.clone(),
                    cut_added: false,
                });
                let status = if result.exhausted {
                    Status::Optimal
                } else {
                    Status::BestFeasible
                };
                let outcome = SolveOutcome {
                    status,
                    subset: Some(subset),
                    fit: Some(fit),
                    diagnostics: Some(diagnostics),
                    alt: None,
                    nodes_explored: nodes,
                    cuts_added: cut_order.len(),
                    candidates_evaluated: evaluated,
                    cut_pool: cut_order,
                    bound_context: Some(ctx),
                    wall_time: started.elapsed().as_secs_f64(),
                };
                return Ok((outcome, trace));
            }
            let out_of_time = !result.exhausted || Instant::now() >= deadline;
            trace.iterations.push(IterStep {
                subset: subset.clone(),
                sse: fit.sse,
                diagnostics: diagnostics.clone(),
                cut_added: !out_of_time,
            });
            last = Some((fit, diagnostics));
            if out_of_time {
                break Status::Alternative;
            }
            excluded.insert(subset.clone());
            cut_order.push(subset);
        };

        let outcome = SolveOutcome {
            status,
            subset: None,
            fit: None,
            diagnostics: None,
            alt: last.map(|(fit, diagnostics)| alt_record(fit, diagnostics, cfg)),
            nodes_explored: nodes,
            cuts_added: cut_order.len(),
            candidates_evaluated: evaluated,
            cut_pool: cut_order,
            bound_context: Some(ctx),
            wall_time: started.elapsed().as_secs_f64(),
        };
        Ok((outcome, trace))
    })?
}
