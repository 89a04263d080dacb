//! Command-line configuration and the run driver behind the `regsel` binary.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_forward, solve_iterative, IterTrace};
use crate::data::{load_table, preprocess, Dataset, LogShift, TableFormat};
use crate::error::{Error, Result};
use crate::metrics::ComparisonRow;
use crate::report::{write_comparison_rows, write_residuals, OutcomeReport};
use crate::solver::{solve_base, solve_lazy, solve_penalty, SolveOutcome, SolverConfig, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lazy,
    Base,
    Fs,
    Iter,
    Penalty,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lazy => "lazy",
            Method::Base => "base",
            Method::Fs => "fs",
            Method::Iter => "iter",
            Method::Penalty => "penalty",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lazy" => Ok(Method::Lazy),
            "base" => Ok(Method::Base),
            "fs" => Ok(Method::Fs),
            "iter" => Ok(Method::Iter),
            "penalty" => Ok(Method::Penalty),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected lazy, base, fs, iter or penalty)"
            ))),
        }
    }
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Error::Config("no method given".into()));
    }
    Ok(methods)
}

/// Inclusive range of k values, written `k` or `a:b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
}

impl KRange {
    pub fn values(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

impl FromStr for KRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<KRange> {
        let bad = || Error::Config(format!("invalid k {s:?} (expected k or a:b)"));
        let (start, end) = match s.split_once(':') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let k = s.trim().parse().map_err(|_| bad())?;
                (k, k)
            }
        };
        if start == 0 || start > end {
            return Err(bad());
        }
        Ok(KRange { start, end })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub response: String,
    pub methods: Vec<Method>,
    pub k: KRange,
    pub solver: SolverConfig,
    pub delimiter: u8,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, response: &str, k: KRange) -> RunConfig {
        RunConfig {
            input: input.into(),
            response: response.to_string(),
            methods: vec![Method::Lazy],
            k,
            solver: SolverConfig::default(),
            delimiter: b',',
            out: PathBuf::from("out"),
        }
    }

    pub fn dataset_id(&self) -> String {
        self.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "regsel", version, about = "Best k-subset regression with enforced diagnostics")]
pub struct Args {
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated: lazy, base, fs, iter, penalty
    #[arg(long)]
    pub method: Option<String>,
    /// Single value or inclusive range a:b
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub alpha_e: Option<f64>,
    #[arg(long)]
    pub alpha_l: Option<f64>,
    #[arg(long)]
    pub alpha_h: Option<f64>,
    #[arg(long)]
    pub lambda_mse: Option<f64>,
    #[arg(long)]
    pub lambda_pi: Option<f64>,
    #[arg(long)]
    pub lambda_e: Option<f64>,
    #[arg(long)]
    pub lambda_l: Option<f64>,
    #[arg(long)]
    pub lambda_h: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub bigm_samples: Option<usize>,
    #[arg(long)]
    pub bigm_safety: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds per solve
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// dashes and underscores in keys are interchangeable.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
        pairs.push((key.trim().replace('-', "_"), value.trim().to_string()));
    }
    Ok(pairs)
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl Args {
    /// Fills unset fields from config-file pairs.
    fn merge_file(&mut self, pairs: Vec<(String, String)>) -> Result<()> {
        for (key, value) in pairs {
            let v = value.as_str();
            let k = key.as_str();
            match k {
                "input" => _ = self.input.get_or_insert_with(|| PathBuf::from(v)),
                "response" => _ = self.response.get_or_insert_with(|| v.to_string()),
                "method" => _ = self.method.get_or_insert_with(|| v.to_string()),
                "k" => _ = self.k.get_or_insert_with(|| v.to_string()),
                "alpha_e" => _ = self.alpha_e.get_or_insert(num(k, v)?),
                "alpha_l" => _ = self.alpha_l.get_or_insert(num(k, v)?),
                "alpha_h" => _ = self.alpha_h.get_or_insert(num(k, v)?),
                "lambda_mse" => _ = self.lambda_mse.get_or_insert(num(k, v)?),
                "lambda_pi" => _ = self.lambda_pi.get_or_insert(num(k, v)?),
                "lambda_e" => _ = self.lambda_e.get_or_insert(num(k, v)?),
                "lambda_l" => _ = self.lambda_l.get_or_insert(num(k, v)?),
                "lambda_h" => _ = self.lambda_h.get_or_insert(num(k, v)?),
                "tau" => _ = self.tau.get_or_insert(num(k, v)?),
                "bigm_samples" => _ = self.bigm_samples.get_or_insert(num(k, v)?),
                "bigm_safety" => _ = self.bigm_safety.get_or_insert(num(k, v)?),
                "seed" => _ = self.seed.get_or_insert(num(k, v)?),
                "time_limit" => _ = self.time_limit.get_or_insert(num(k, v)?),
                "threads" => _ = self.threads.get_or_insert(num(k, v)?),
                "delimiter" => _ = self.delimiter.get_or_insert(num(k, v)?),
                "out" => _ = self.out.get_or_insert_with(|| PathBuf::from(v)),
                other => return Err(Error::Config(format!("unknown config key {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn into_config(mut self) -> Result<RunConfig> {
        if let Some(path) = self.config.clone() {
            let text = fs::read_to_string(&path)?;
            self.merge_file(parse_config_text(&text)?)?;
        }
        let input = self
            .input
            .ok_or_else(|| Error::Config("--input is required".into()))?;
        let response = self
            .response
            .ok_or_else(|| Error::Config("--response is required".into()))?;
        let k: KRange = self
            .k
            .as_deref()
            .ok_or_else(|| Error::Config("--k is required".into()))?
            .parse()?;
        let mut cfg = RunConfig::new(input, &response, k);
        if let Some(m) = &self.method {
            cfg.methods = parse_methods(m)?;
        }
        let s = &mut cfg.solver;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut s.significance.alpha_e, self.alpha_e);
        set(&mut s.significance.alpha_l, self.alpha_l);
        set(&mut s.significance.alpha_h, self.alpha_h);
        set(&mut s.penalty.lambda_mse, self.lambda_mse);
        set(&mut s.penalty.lambda_pi, self.lambda_pi);
        set(&mut s.penalty.lambda_e, self.lambda_e);
        set(&mut s.penalty.lambda_l, self.lambda_l);
        set(&mut s.penalty.lambda_h, self.lambda_h);
        set(&mut s.penalty.tau, self.tau);
        set(&mut s.big_m.safety, self.bigm_safety);
        if let Some(v) = self.bigm_samples {
            s.big_m.num_samples = v;
        }
        if let Some(v) = self.seed {
            s.big_m.seed = v;
        }
        if let Some(v) = self.time_limit {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("time limit must be >= 0, got {v}")));
            }
            s.time_limit = Duration::from_secs_f64(v);
        }
        if let Some(v) = self.threads {
            s.threads = v;
        }
        if let Some(d) = self.delimiter {
            if !d.is_ascii() {
                return Err(Error::Config(format!("delimiter must be ASCII, got {d:?}")));
            }
            cfg.delimiter = d as u8;
        }
        if let Some(out) = self.out {
            cfg.out = out;
        }
        validate_run_config(&cfg)?;
        Ok(cfg)
    }
}

pub fn validate_run_config(cfg: &RunConfig) -> Result<()> {
    cfg.solver.validate()?;
    if cfg.solver.big_m.num_samples == 0 {
        return Err(Error::Config("bigm-samples must be >= 1".into()));
    }
    if !(cfg.solver.big_m.safety.is_finite() && cfg.solver.big_m.safety > 0.0) {
        return Err(Error::Config("bigm-safety must be > 0".into()));
    }
    Ok(())
}

/// Result of one (method, k) solve.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub k: usize,
    pub outcome: SolveOutcome,
    pub trace: Option<IterTrace>,
}

pub fn solve_method(
    dataset: &Dataset,
    method: Method,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(SolveOutcome, Option<IterTrace>)> {
    match method {
        Method::Lazy => Ok((solve_lazy(dataset, k, cfg)?, None)),
        Method::Base => Ok((solve_base(dataset, k, cfg)?, None)),
        Method::Penalty => Ok((solve_penalty(dataset, k, cfg)?, None)),
        Method::Fs => Ok((solve_forward(dataset, k, cfg)?, None)),
        Method::Iter => {
            let (outcome, trace) = solve_iterative(dataset, k, cfg)?;
            Ok((outcome, Some(trace)))
        }
    }
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let file = File::open(&cfg.input)?;
    let raw = load_table(
        file,
        TableFormat {
            delimiter: cfg.delimiter,
        },
    )?;
    preprocess(&raw, &cfg.response, LogShift::default())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub runs: Vec<MethodRun>,
    pub rows: Vec<ComparisonRow>,
}

impl RunSummary {
    /// 2 when any solve ended infeasible with an alternative, otherwise 0.
    pub fn exit_code(&self) -> i32 {
        if self
            .runs
            .iter()
            .any(|r| r.outcome.status == Status::InfeasibleWithAlternative)
        {
            2
        } else {
            0
        }
    }
}

fn artifact(dir: &Path, stem: &str, method: Method, k: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{}_k{k}.{ext}", method.as_str()))
}

/// Solves every requested (k, method) pair and writes the artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    validate_run_config(cfg)?;
    let dataset = load_dataset(cfg)?;
    let id = cfg.dataset_id();
    fs::create_dir_all(&cfg.out)?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();

    for k in cfg.k.values() {
        let mut base: Option<SolveOutcome> = None;
        let mut batch = Vec::new();
        for &method in &cfg.methods {
            log::info!("solving {id} k={k} method={}", method.as_str());
            let (outcome, trace) = solve_method(&dataset, method, k, &cfg.solver)?;
            if method == Method::Base {
                base = Some(outcome.clone());
            }
            batch.push(MethodRun {
                method,
                k,
                outcome,
                trace,
            });
        }
        if base.is_none() {
            base = Some(solve_base(&dataset, k, &cfg.solver)?);
        }

        for r in &batch {
            let report = OutcomeReport::new(
                &id,
                &dataset,
                r.method.as_str(),
                k,
                &r.outcome,
                r.trace.as_ref(),
                &cfg.solver,
            );
            fs::write(
                artifact(&cfg.out, "outcome", r.method, k, "json"),
                report.to_json()? + "\n",
            )?;
            if let Some(fit) = r.outcome.selected_fit() {
                let file = File::create(artifact(&cfg.out, "residuals", r.method, k, "csv"))?;
                write_residuals(file, fit)?;
            }
            rows.push(ComparisonRow::from_outcome(
                &id,
                k,
                r.method.as_str(),
                &r.outcome,
                base.as_ref(),
            ));
        }
        runs.extend(batch);
    }

    let path = cfg.out.join("comparison.csv");
    let fresh = !path.exists();
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    write_comparison_rows(file, &rows, fresh)?;
    Ok(RunSummary { runs, rows })
}

/// One line per solve for the terminal.
pub fn summary_line(dataset: &Dataset, run: &MethodRun) -> String {
    let o = &run.outcome;
    let names = o
        .selected()
        .map(|s| {
            s.iter()
                .map(|&j| dataset.column_name(j).to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .unwrap_or_else(|| "-".into());
    let sse = o
        .selected_fit()
        .map(|f| format!("{:.6}", f.sse))
        .unwrap_or_else(|| "-".into());
    format!(
        "k={} method={} status={} subset=[{}] sse={} nodes={} cuts={} time={:.3}s",
        run.k,
        run.method.as_str(),
        o.status.as_str(),
        names,
        sse,
        o.nodes_explored,
        o.cuts_added,
        o.wall_time
    )
}
