//! Near-feasible alternative selection used while no subset has passed every
//! diagnostic.
//!
//! Candidates are compared on coefficient significance first (`pi`, `E`) and
//! only then on the penalty `q`, which folds MSE and residual-test violations
//! into one score.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsReport, SignificanceConfig};
use crate::error::{Error, Result};
use crate::linalg::FitResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub lambda_mse: f64,
    pub lambda_pi: f64,
    pub lambda_e: f64,
    pub lambda_l: f64,
    pub lambda_h: f64,
    pub tau: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        PenaltyParams {
            lambda_mse: 4.0,
            lambda_pi: 0.5,
            lambda_e: 6.0,
            lambda_l: 0.5,
            lambda_h: 0.5,
            tau: 0.1,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_mse", self.lambda_mse),
            ("lambda_pi", self.lambda_pi),
            ("lambda_e", self.lambda_e),
            ("lambda_l", self.lambda_l),
            ("lambda_h", self.lambda_h),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltCandidate {
    pub subset: Vec<usize>,
    pub mse: f64,
    pub pi: usize,
    pub e: f64,
    pub r_l: f64,
    pub r_h: f64,
}

impl AltCandidate {
    pub fn new(fit: &FitResult, report: &DiagnosticsReport) -> AltCandidate {
        AltCandidate {
            subset: fit.subset.clone(),
            mse: fit.mse,
            pi: report.pi,
            e: report.e,
            r_l: report.r_l,
            r_h: report.r_h,
        }
    }
}

/// Scaled violation of the coefficient threshold: `max(p - (1-α), 0) / α`.
pub fn w1(p: f64, alpha: f64) -> f64 {
    (p - (1.0 - alpha)).max(0.0) / alpha
}

/// Scaled violation of a residual-test threshold: `max((1-α) - p, 0) / (1-α)`.
pub fn w2(p: f64, alpha: f64) -> f64 {
    ((1.0 - alpha) - p).max(0.0) / (1.0 - alpha)
}

/// Penalty score; lower is better.
pub fn penalty_q(c: &AltCandidate, params: &PenaltyParams, cfg: &SignificanceConfig) -> f64 {
    params.lambda_mse * c.mse
        + params.lambda_pi * c.pi as f64
        + params.lambda_e * w1(c.e, cfg.alpha_e)
        + params.lambda_l * w2(c.r_l, cfg.alpha_l)
        + params.lambda_h * w2(c.r_h, cfg.alpha_h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pick {
    /// The incumbent (first argument).
    Best,
    /// The challenger (second argument).
    New,
}

/// Which rule settled a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Initial,
    Significance,
    Tolerance,
    Dominance,
    Quality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub pick: Pick,
    pub route: Route,
}

/// Decision by quality: smaller `q` wins, ties keep the incumbent.
pub fn decide_quality(
    best: &AltCandidate,
    new: &AltCandidate,
    params: &PenaltyParams,
    cfg: &SignificanceConfig,
) -> Decision {
    let pick = if penalty_q(new, params, cfg) < penalty_q(best, params, cfg) {
        Pick::New
    } else {
        Pick::Best
    };
    Decision {
        pick,
        route: Route::Quality,
    }
}

/// Decision with tolerance, for two candidates that both have insignificant
/// coefficients.
pub fn decide_tolerance(
    best: &AltCandidate,
    new: &AltCandidate,
    params: &PenaltyParams,
    cfg: &SignificanceConfig,
) -> Decision {
    if new.e - best.e > params.tau {
        return Decision {
            pick: Pick::Best,
            route: Route::Tolerance,
        };
    }
    if best.e > new.e && best.pi > new.pi {
        Decision {
            pick: Pick::New,
            route: Route::Dominance,
        }
    } else if best.e < new.e && best.pi < new.pi {
        Decision {
            pick: Pick::Best,
            route: Route::Dominance,
        }
    } else {
        decide_quality(best, new, params, cfg)
    }
}

/// Rule used to replace the alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltComparator {
    /// Significance first, then tolerance, dominance and quality.
    #[default]
    Procedure,
    /// Quality (`q`) alone.
    PenaltyOnly,
}

pub fn compare(
    best: &AltCandidate,
    new: &AltCandidate,
    params: &PenaltyParams,
    cfg: &SignificanceConfig,
    comparator: AltComparator,
) -> Decision {
    match comparator {
        AltComparator::PenaltyOnly => decide_quality(best, new, params, cfg),
        AltComparator::Procedure => match (best.pi > 0, new.pi > 0) {
            (true, false) => Decision {
                pick: Pick::New,
                route: Route::Significance,
            },
            (false, true) => Decision {
                pick: Pick::Best,
                route: Route::Significance,
            },
            (false, false) => decide_quality(best, new, params, cfg),
            (true, true) => decide_tolerance(best, new, params, cfg),
        },
    }
}

/// Single-slot alternative state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AltState {
    pub best: Option<AltCandidate>,
    /// Number of candidates offered to the state.
    pub offered: usize,
    /// Number of times the held alternative changed.
    pub replacements: usize,
}

impl AltState {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn asp_update(
    mut state: AltState,
    new: AltCandidate,
    params: &PenaltyParams,
    cfg: &SignificanceConfig,
    comparator: AltComparator,
) -> (AltState, Decision) {
    state.offered += 1;
    let decision = match &state.best {
        None => Decision {
            pick: Pick::New,
            route: Route::Initial,
        },
        Some(best) => compare(best, &new, params, cfg, comparator),
    };
    if decision.pick == Pick::New {
        state.best = Some(new);
        state.replacements += 1;
    }
    (state, decision)
}
