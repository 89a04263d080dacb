//! Best-first branch-and-bound over column inclusion decisions.
//!
//! A node fixes some columns in and some out. Its bound is the SSE of the
//! least-squares fit on the fixed-in columns plus every column that could
//! still be added; by SSE monotonicity no completion of the node can do
//! better. Complete candidates are checked against the diagnostics and
//! either become the incumbent or are cut (each cut excludes exactly one
//! k-subset). While nothing feasible has been found, cut candidates feed the
//! alternative-solution state.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altsol::{asp_update, penalty_q, AltCandidate, AltComparator, AltState, PenaltyParams, Pick};
use crate::bounds::{bound_context, relaxed_ttest_filter, BigMConfig, BoundContext};
use crate::data::Dataset;
use crate::diagnostics::{run_diagnostics, DiagnosticsReport, EnabledTests, SignificanceConfig};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, ols_fit, FitResult};

/// Slack in the pruning rule `bound >= incumbent - PRUNE_TOL`.
pub const PRUNE_TOL: f64 = 1e-12;

/// A sorted, pair-legal set of column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateSubset(Vec<usize>);

impl CandidateSubset {
    pub fn new(dataset: &Dataset, mut indices: Vec<usize>) -> Result<CandidateSubset> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        if !dataset.is_pair_legal(&indices) {
            return Err(Error::InvalidSubset(format!(
                "{indices:?} repeats a column or selects a column with its log partner"
            )));
        }
        Ok(CandidateSubset(indices))
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> CandidateSubset {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        CandidateSubset(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self, dataset: &Dataset) -> Vec<String> {
        self.0.iter().map(|&j| dataset.column_name(j).to_string()).collect()
    }
}

/// No-good cuts in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CutPool {
    order: Vec<CandidateSubset>,
    set: HashSet<CandidateSubset>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the subset was already cut.
    pub fn add(&mut self, subset: CandidateSubset) -> bool {
        if self.set.insert(subset.clone()) {
            self.order.push(subset);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, subset: &CandidateSubset) -> bool {
        self.set.contains(subset)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CandidateSubset> {
        self.order.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Feasible and the tree was exhausted.
    Optimal,
    /// Feasible, stopped by the time limit.
    BestFeasible,
    /// Stopped by the time limit with nothing feasible; the alternative is reported.
    Alternative,
    /// Tree exhausted with nothing feasible; the alternative is reported.
    InfeasibleWithAlternative,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::BestFeasible => "best_feasible",
            Status::Alternative => "alternative",
            Status::InfeasibleWithAlternative => "infeasible_with_alternative",
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Status::Optimal | Status::BestFeasible)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub significance: SignificanceConfig,
    pub penalty: PenaltyParams,
    pub big_m: BigMConfig,
    pub time_limit: Duration,
    pub threads: usize,
    pub tests: EnabledTests,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            significance: SignificanceConfig::default(),
            penalty: PenaltyParams::default(),
            big_m: BigMConfig::default(),
            time_limit: Duration::from_secs(600),
            threads: 1,
            tests: EnabledTests::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.significance.validate()?;
        self.penalty.validate()?;
        if self.threads == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltRecord {
    pub candidate: AltCandidate,
    pub fit: FitResult,
    pub diagnostics: DiagnosticsReport,
    /// Penalty score under the configured parameters.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub subset: Option<CandidateSubset>,
    pub fit: Option<FitResult>,
    pub diagnostics: Option<DiagnosticsReport>,
    pub alt: Option<AltRecord>,
    pub nodes_explored: usize,
    pub cuts_added: usize,
    pub candidates_evaluated: usize,
    pub cut_pool: Vec<CandidateSubset>,
    pub bound_context: Option<BoundContext>,
    pub wall_time: f64,
}

impl SolveOutcome {
    /// The subset a caller should use: the incumbent, or the alternative.
    pub fn selected(&self) -> Option<&[usize]> {
        self.subset
            .as_ref()
            .map(|s| s.indices())
            .or_else(|| self.alt.as_ref().map(|a| a.fit.subset.as_slice()))
    }

    pub fn selected_fit(&self) -> Option<&FitResult> {
        self.fit.as_ref().or_else(|| self.alt.as_ref().map(|a| &a.fit))
    }

    pub fn selected_diagnostics(&self) -> Option<&DiagnosticsReport> {
        self.diagnostics
            .as_ref()
            .or_else(|| self.alt.as_ref().map(|a| &a.diagnostics))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Cut,
}

#[derive(Debug, Clone)]
pub struct CandidateCheck {
    pub verdict: Verdict,
    pub fit: FitResult,
    /// Absent when the relaxed t-test rejected the subset before diagnostics.
    pub diagnostics: Option<DiagnosticsReport>,
    pub prefiltered: bool,
}

/// Fits a complete candidate and decides whether it passes every enabled test.
pub fn check_candidate(
    dataset: &Dataset,
    subset: &CandidateSubset,
    cfg: &SolverConfig,
    ctx: Option<&BoundContext>,
) -> Result<CandidateCheck> {
    let fit = ols_fit(dataset, subset.indices())?;
    if let Some(ctx) = ctx {
        if cfg.tests.coefficients && fit.is_full_rank() && !relaxed_ttest_filter(&fit, ctx) {
            return Ok(CandidateCheck {
                verdict: Verdict::Cut,
                fit,
                diagnostics: None,
                prefiltered: true,
            });
        }
    }
    let diagnostics = run_diagnostics(dataset, &fit, &cfg.significance, &cfg.tests);
    let verdict = if diagnostics.feasible {
        Verdict::Feasible
    } else {
        Verdict::Cut
    };
    Ok(CandidateCheck {
        verdict,
        fit,
        diagnostics: Some(diagnostics),
        prefiltered: false,
    })
}

/// Search node. `fixed_out[j]` marks columns excluded by branching; partners
/// of fixed-in columns are excluded implicitly.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub fixed_in: Vec<usize>,
    pub fixed_out: Vec<bool>,
    pub lower_bound: f64,
    /// Coefficients of the bound fit, aligned with `bound_columns`.
    bound_coefs: Vec<f64>,
    bound_columns: Vec<usize>,
}

impl SearchNode {
    pub fn root(dataset: &Dataset) -> SearchNode {
        SearchNode {
            fixed_in: Vec::new(),
            fixed_out: vec![false; dataset.n_columns()],
            lower_bound: 0.0,
            bound_coefs: Vec::new(),
            bound_columns: Vec::new(),
        }
    }

    pub fn with_fixed(dataset: &Dataset, fixed_in: &[usize], fixed_out: &[usize]) -> SearchNode {
        let mut node = SearchNode::root(dataset);
        node.fixed_in = fixed_in.to_vec();
        node.fixed_in.sort_unstable();
        for &j in fixed_out {
            node.fixed_out[j] = true;
        }
        node
    }

    /// Columns that may still be added to `fixed_in`.
    pub fn free_columns(&self, dataset: &Dataset, k: usize) -> Vec<usize> {
        if self.fixed_in.len() >= k {
            return Vec::new();
        }
        (0..dataset.n_columns())
            .filter(|&j| {
                !self.fixed_out[j]
                    && !self.fixed_in.contains(&j)
                    && !self.fixed_in.contains(&dataset.pair(j))
            })
            .collect()
    }

    /// Whether some pair-legal completion of size k exists.
    pub fn can_complete(&self, dataset: &Dataset, k: usize) -> bool {
        let free = self.free_columns(dataset, k);
        let mut pairs: Vec<usize> = free.iter().map(|&j| j % dataset.m()).collect();
        pairs.sort_unstable();
        pairs.dedup();
        self.fixed_in.len() + pairs.len() >= k && self.fixed_in.len() <= k
    }
}

/// SSE of the least-squares fit on the fixed-in plus free columns.
pub fn node_bound(dataset: &Dataset, node: &SearchNode, k: usize) -> f64 {
    evaluate_bound(dataset, node, k, None).0
}

/// Least-squares SSE and coefficients keyed by sorted column set, shared by
/// repeated searches over one dataset.
type CachedFit = Arc<(f64, Vec<f64>)>;

#[derive(Debug, Default)]
pub(crate) struct FitCache {
    map: Mutex<HashMap<Vec<usize>, CachedFit>>,
}

impl FitCache {
    fn get(&self, dataset: &Dataset, cols: &[usize]) -> CachedFit {
        if let Some(hit) = self.map.lock().unwrap().get(cols) {
            return Arc::clone(hit);
        }
        let entry = Arc::new(fit_columns(dataset, cols));
        self.map
            .lock()
            .unwrap()
            .insert(cols.to_vec(), Arc::clone(&entry));
        entry
    }
}

fn fit_columns(dataset: &Dataset, cols: &[usize]) -> (f64, Vec<f64>) {
    let ls = least_squares(&dataset.submatrix(cols), dataset.response());
    (ls.sse, ls.coefficients.iter().copied().collect())
}

fn evaluate_bound(
    dataset: &Dataset,
    node: &SearchNode,
    k: usize,
    cache: Option<&FitCache>,
) -> (f64, Vec<usize>, Vec<f64>) {
    let mut cols = node.fixed_in.clone();
    cols.extend(node.free_columns(dataset, k));
    cols.sort_unstable();
    let (sse, coefs) = match cache {
        Some(c) => {
            let hit = c.get(dataset, &cols);
            (hit.0, hit.1.clone())
        }
        None => fit_columns(dataset, &cols),
    };
    (sse, cols, coefs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Minimum SSE only.
    Base,
    /// Diagnostics enforced by lazy cuts, alternative maintained with the
    /// given comparator.
    Lazy(AltComparator),
}

/// Best feasible subset so far. The base search records only the SSE; the
/// full fit is computed once at the end.
pub(crate) struct Incumbent {
    pub subset: CandidateSubset,
    pub sse: f64,
    pub fit: Option<FitResult>,
    pub diagnostics: Option<DiagnosticsReport>,
}

impl Incumbent {
    pub(crate) fn into_parts(
        self,
        dataset: &Dataset,
        cfg: &SolverConfig,
    ) -> Result<(CandidateSubset, FitResult, DiagnosticsReport)> {
        let fit = match self.fit {
            Some(fit) => fit,
            None => ols_fit(dataset, self.subset.indices())?,
        };
        let diagnostics = self
            .diagnostics
            .unwrap_or_else(|| run_diagnostics(dataset, &fit, &cfg.significance, &cfg.tests));
        Ok((self.subset, fit, diagnostics))
    }
}

/// Result of one tree search before it is packaged as a [`SolveOutcome`].
pub(crate) struct SearchResult {
    pub incumbent: Option<Incumbent>,
    pub alt: Option<AltRecord>,
    pub exhausted: bool,
    pub nodes_explored: usize,
    pub candidates_evaluated: usize,
    pub cuts: CutPool,
}

struct HeapEntry {
    bound: f64,
    seq: u64,
    node: SearchNode,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.seq.cmp(&other.seq))
    }
}

pub(crate) struct Search<'a> {
    dataset: &'a Dataset,
    k: usize,
    cfg: &'a SolverConfig,
    mode: Mode,
    ctx: Option<&'a BoundContext>,
    excluded: &'a HashSet<CandidateSubset>,
    deadline: Instant,
    parallel: bool,
    cache: Option<&'a FitCache>,

    incumbent: Option<Incumbent>,
    alt_state: AltState,
    alt_detail: Option<(FitResult, DiagnosticsReport)>,
    evaluated: HashSet<CandidateSubset>,
    cuts: CutPool,
    nodes_explored: usize,
    seq: u64,
}

impl<'a> Search<'a> {
    pub(crate) fn new(
        dataset: &'a Dataset,
        k: usize,
        cfg: &'a SolverConfig,
        mode: Mode,
        ctx: Option<&'a BoundContext>,
        excluded: &'a HashSet<CandidateSubset>,
        deadline: Instant,
    ) -> Search<'a> {
        Search {
            dataset,
            k,
            cfg,
            mode,
            ctx,
            excluded,
            deadline,
            parallel: cfg.threads > 1,
            cache: None,
            incumbent: None,
            alt_state: AltState::new(),
            alt_detail: None,
            evaluated: HashSet::new(),
            cuts: CutPool::new(),
            nodes_explored: 0,
            seq: 0,
        }
    }

    pub(crate) fn with_cache(mut self, cache: &'a FitCache) -> Search<'a> {
        self.cache = Some(cache);
        self
    }

    fn incumbent_sse(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map(|inc| inc.sse)
            .unwrap_or(f64::INFINITY)
    }

    fn offer_incumbent(&mut self, candidate: Incumbent) {
        let better = match &self.incumbent {
            None => true,
            Some(inc) => {
                candidate.sse < inc.sse || (candidate.sse == inc.sse && candidate.subset < inc.subset)
            }
        };
        if better {
            self.incumbent = Some(candidate);
        }
    }

    /// `known_sse` is the exact SSE of the subset when the caller has it.
    fn evaluate_candidate(&mut self, subset: CandidateSubset, known_sse: Option<f64>) -> Result<()> {
        if self.excluded.contains(&subset) || !self.evaluated.insert(subset.clone()) {
            return Ok(());
        }
        match self.mode {
            Mode::Base => {
                let sse = match (known_sse, self.cache) {
                    (Some(sse), _) => sse,
                    (None, Some(cache)) => cache.get(self.dataset, subset.indices()).0,
                    (None, None) => fit_columns(self.dataset, subset.indices()).0,
                };
                self.offer_incumbent(Incumbent {
                    subset,
                    sse,
                    fit: None,
                    diagnostics: None,
                });
            }
            Mode::Lazy(comparator) => {
                let check = check_candidate(self.dataset, &subset, self.cfg, self.ctx)?;
                match check.verdict {
                    Verdict::Feasible => {
                        self.offer_incumbent(Incumbent {
                            subset,
                            sse: check.fit.sse,
                            fit: Some(check.fit),
                            diagnostics: check.diagnostics,
                        });
                    }
                    Verdict::Cut => {
                        self.cuts.add(subset);
                        if self.incumbent.is_none() {
                            let diagnostics = check.diagnostics.unwrap_or_else(|| {
                                run_diagnostics(
                                    self.dataset,
                                    &check.fit,
                                    &self.cfg.significance,
                                    &self.cfg.tests,
                                )
                            });
                            let candidate = AltCandidate::new(&check.fit, &diagnostics);
                            let state = std::mem::take(&mut self.alt_state);
                            let (state, decision) = asp_update(
                                state,
                                candidate,
                                &self.cfg.penalty,
                                &self.cfg.significance,
                                comparator,
                            );
                            self.alt_state = state;
                            if decision.pick == Pick::New {
                                self.alt_detail = Some((check.fit, diagnostics));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Top-|coefficient| completion of a node, legalized greedily.
    fn heuristic_completion(&self, node: &SearchNode) -> Option<CandidateSubset> {
        let mut chosen = node.fixed_in.clone();
        let mut order: Vec<(usize, f64)> = node
            .bound_columns
            .iter()
            .zip(&node.bound_coefs)
            .filter(|(j, _)| !node.fixed_in.contains(j))
            .map(|(&j, &c)| (j, c.abs()))
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (j, _) in order {
            if chosen.len() == self.k {
                break;
            }
            if !chosen.contains(&self.dataset.pair(j)) {
                chosen.push(j);
            }
        }
        if chosen.len() != self.k {
            return None;
        }
        chosen.sort_unstable();
        Some(CandidateSubset::from_sorted(chosen))
    }

    fn finish_node(&self, mut node: SearchNode) -> Option<SearchNode> {
        if !node.can_complete(self.dataset, self.k) {
            return None;
        }
        let (bound, cols, coefs) = evaluate_bound(self.dataset, &node, self.k, self.cache);
        node.lower_bound = bound;
        node.bound_columns = cols;
        node.bound_coefs = coefs;
        Some(node)
    }

    fn push(&mut self, heap: &mut BinaryHeap<Reverse<HeapEntry>>, node: SearchNode) {
        if node.lower_bound >= self.incumbent_sse() - PRUNE_TOL {
            return;
        }
        self.seq += 1;
        heap.push(Reverse(HeapEntry {
            bound: node.lower_bound,
            seq: self.seq,
            node,
        }));
    }

    pub(crate) fn run(mut self) -> Result<SearchResult> {
        let mut heap = BinaryHeap::new();
        let mut exhausted = true;
        if let Some(root) = self.finish_node(SearchNode::root(self.dataset)) {
            self.push(&mut heap, root);
        }

        while let Some(Reverse(entry)) = heap.pop() {
            let node = entry.node;
            if (!self.evaluated.is_empty() || self.nodes_explored > 0) && Instant::now() >= self.deadline {
                exhausted = false;
                break;
            }
            self.nodes_explored += 1;
            if node.lower_bound >= self.incumbent_sse() - PRUNE_TOL {
                continue;
            }
            if node.fixed_in.len() == self.k {
                let sse = node.lower_bound;
                self.evaluate_candidate(CandidateSubset::from_sorted(node.fixed_in), Some(sse))?;
                continue;
            }
            if let Some(h) = self.heuristic_completion(&node) {
                self.evaluate_candidate(h, None)?;
            }
            if node.lower_bound >= self.incumbent_sse() - PRUNE_TOL {
                continue;
            }

            if node.fixed_in.len() + 1 == self.k {
                // one slot left: every completion becomes a leaf with its exact SSE
                let leaves: Vec<SearchNode> = node
                    .free_columns(self.dataset, self.k)
                    .into_iter()
                    .map(|j| {
                        let mut leaf = node.clone();
                        leaf.fixed_in.push(j);
                        leaf.fixed_in.sort_unstable();
                        leaf
                    })
                    .collect();
                let leaves: Vec<SearchNode> = if self.parallel {
                    leaves
                        .into_par_iter()
                        .filter_map(|l| self.finish_node(l))
                        .collect()
                } else {
                    leaves
                        .into_iter()
                        .filter_map(|l| self.finish_node(l))
                        .collect()
                };
                for leaf in leaves {
                    self.push(&mut heap, leaf);
                }
                continue;
            }

            let branch = node
                .bound_columns
                .iter()
                .zip(&node.bound_coefs)
                .filter(|(j, _)| !node.fixed_in.contains(j))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(a.0)))
                .map(|(&j, _)| j);
            let Some(j) = branch else { continue };

            let mut include = node.clone();
            include.fixed_in.push(j);
            include.fixed_in.sort_unstable();
            let mut exclude = node;
            exclude.fixed_out[j] = true;

            let (include, exclude) = if self.parallel {
                rayon::join(|| self.finish_node(include), || self.finish_node(exclude))
            } else {
                (self.finish_node(include), self.finish_node(exclude))
            };
            if let Some(n) = include {
                self.push(&mut heap, n);
            }
            if let Some(n) = exclude {
                self.push(&mut heap, n);
            }
        }

        let alt = match (self.alt_state.best.take(), self.alt_detail.take()) {
            (Some(candidate), Some((fit, diagnostics))) => {
                let q = penalty_q(&candidate, &self.cfg.penalty, &self.cfg.significance);
                Some(AltRecord {
                    candidate,
                    fit,
                    diagnostics,
                    q,
                })
            }
            _ => None,
        };
        Ok(SearchResult {
            incumbent: self.incumbent,
            alt,
            exhausted,
            nodes_explored: self.nodes_explored,
            candidates_evaluated: self.evaluated.len(),
            cuts: self.cuts,
        })
    }
}

pub(crate) fn validate_request(dataset: &Dataset, k: usize, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if k == 0 || k > dataset.m() {
        return Err(Error::Config(format!(
            "k must lie in 1..={}, got {k}",
            dataset.m()
        )));
    }
    if dataset.n() < k + 2 {
        return Err(Error::DegreesOfFreedom {
            n: dataset.n(),
            k,
        });
    }
    Ok(())
}

/// Runs `f` on a dedicated pool when more than one thread is configured.
pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn package(
    dataset: &Dataset,
    cfg: &SolverConfig,
    result: SearchResult,
    ctx: Option<BoundContext>,
    started: Instant,
) -> Result<SolveOutcome> {
    let (status, subset, fit, diagnostics) = match result.incumbent {
        Some(incumbent) => {
            let (subset, fit, diagnostics) = incumbent.into_parts(dataset, cfg)?;
            let status = if result.exhausted {
                Status::Optimal
            } else {
                Status::BestFeasible
            };
            (status, Some(subset), Some(fit), Some(diagnostics))
        }
        None => {
            let status = if result.exhausted {
                Status::InfeasibleWithAlternative
            } else {
                Status::Alternative
            };
            (status, None, None, None)
        }
    };
    Ok(SolveOutcome {
        status,
        subset,
        fit,
        diagnostics,
        alt: result.alt,
        nodes_explored: result.nodes_explored,
        cuts_added: result.cuts.len(),
        candidates_evaluated: result.candidates_evaluated,
        cut_pool: result.cuts.iter().cloned().collect(),
        bound_context: ctx,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Minimum-SSE pair-legal k-subset, no diagnostics enforced.
pub fn solve_base(dataset: &Dataset, k: usize, cfg: &SolverConfig) -> Result<SolveOutcome> {
    validate_request(dataset, k, cfg)?;
    let started = Instant::now();
    let deadline = started + cfg.time_limit;
    let excluded = HashSet::new();
    let result = with_threads(cfg.threads, || {
        Search::new(dataset, k, cfg, Mode::Base, None, &excluded, deadline).run()
    })??;
    package(dataset, cfg, result, None, started)
}

fn solve_with_diagnostics(
    dataset: &Dataset,
    k: usize,
    cfg: &SolverConfig,
    comparator: AltComparator,
) -> Result<SolveOutcome> {
    validate_request(dataset, k, cfg)?;
    let started = Instant::now();
    let deadline = started + cfg.time_limit;
    let excluded = HashSet::new();
    let (ctx, result) = with_threads(cfg.threads, || -> Result<_> {
        let ctx = bound_context(dataset, k, &cfg.big_m, &cfg.significance, cfg.threads > 1)?;
        let result = Search::new(
            dataset,
            k,
            cfg,
            Mode::Lazy(comparator),
            Some(&ctx),
            &excluded,
            deadline,
        )
        .run()?;
        Ok((ctx, result))
    })??;
    package(dataset, cfg, result, Some(ctx), started)
}

/// Minimum-SSE k-subset passing every enabled diagnostic, found in a single
/// search with lazily added cuts. Falls back to the alternative solution when
/// nothing passes.
pub fn solve_lazy(dataset: &Dataset, k: usize, cfg: &SolverConfig) -> Result<SolveOutcome> {
    solve_with_diagnostics(dataset, k, cfg, AltComparator::Procedure)
}

/// As [`solve_lazy`], but the alternative is chosen by the penalty score alone.
pub fn solve_penalty(dataset: &Dataset, k: usize, cfg: &SolverConfig) -> Result<SolveOutcome> {
    solve_with_diagnostics(dataset, k, cfg, AltComparator::PenaltyOnly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LogShift;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planted(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 40;
        let m = 6;
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0.5..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * cols[0][i] - 1.5 * cols[2][i] + 0.8 * cols[4][i])
            .collect();
        let names: Vec<String> = (0..m).map(|j| format!("x{j}")).collect();
        Dataset::from_columns(&names, &cols, "y", &y, LogShift::default()).unwrap()
    }

    #[test]
    fn subset_validation() {
        let ds = planted(1);
        assert_eq!(CandidateSubset::new(&ds, vec![4, 0]).unwrap().indices(), &[0, 4]);
        assert!(CandidateSubset::new(&ds, vec![0, 6]).is_err());
        assert!(CandidateSubset::new(&ds, vec![]).is_err());
    }

    #[test]
    fn cut_pool_is_exact() {
        let mut pool = CutPool::new();
        let s = CandidateSubset::from_sorted(vec![1, 3]);
        assert!(pool.add(s.clone()));
        assert!(!pool.add(s.clone()));
        assert!(pool.contains(&s));
        assert!(!pool.contains(&CandidateSubset::from_sorted(vec![1, 3, 4])));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn recovers_planted_model() {
        let ds = planted(2);
        let out = solve_base(&ds, 3, &SolverConfig::default()).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert_eq!(out.subset.unwrap().indices(), &[0, 2, 4]);
        assert!(out.fit.unwrap().sse < 1e-18);
    }

    #[test]
    fn leaf_and_root_bounds() {
        let ds = planted(3);
        let leaf = SearchNode::with_fixed(&ds, &[0, 2, 4], &[]);
        let exact = ols_fit(&ds, &[0, 2, 4]).unwrap().sse;
        assert!((node_bound(&ds, &leaf, 3) - exact).abs() < 1e-12);
        let root = SearchNode::root(&ds);
        let full = least_squares(ds.design(), ds.response()).sse;
        assert!((node_bound(&ds, &root, 3) - full).abs() < 1e-12);
    }

    #[test]
    fn completion_feasibility() {
        let ds = planted(4);
        // m = 6: excluding both sides of four pairs leaves two pairs
        let node = SearchNode::with_fixed(&ds, &[], &[0, 6, 1, 7, 2, 8, 3, 9]);
        assert!(node.can_complete(&ds, 2));
        assert!(!node.can_complete(&ds, 3));
    }

    #[test]
    fn config_errors() {
        let ds = planted(5);
        let cfg = SolverConfig::default();
        assert!(matches!(solve_base(&ds, 0, &cfg), Err(Error::Config(_))));
        assert!(matches!(solve_base(&ds, 7, &cfg), Err(Error::Config(_))));
        let bad = SolverConfig {
            threads: 0,
            ..SolverConfig::default()
        };
        assert!(solve_base(&ds, 2, &bad).is_err());
    }

    #[test]
    fn lazy_equals_base_when_unconstrained() {
        let ds = planted(6);
        let cfg = SolverConfig {
            tests: EnabledTests::none(),
            ..SolverConfig::default()
        };
        let base = solve_base(&ds, 2, &cfg).unwrap();
        let lazy = solve_lazy(&ds, 2, &cfg).unwrap();
        assert_eq!(base.subset, lazy.subset);
        assert_eq!(lazy.cuts_added, 0);
    }
}
