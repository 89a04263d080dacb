//! Coefficient significance and residual diagnostics.
//!
//! Significance levels are confidence levels: a p-value violates the
//! coefficient test when it exceeds `1 - alpha_e`, and the residual tests when
//! it falls below `1 - alpha_l` / `1 - alpha_h`.

pub mod distributions;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, FitResult};

pub use distributions::{chi_square_sf, student_t_critical, student_t_two_sided_pvalue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceConfig {
    pub alpha_e: f64,
    pub alpha_l: f64,
    pub alpha_h: f64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig {
            alpha_e: 0.95,
            alpha_l: 0.99,
            alpha_h: 0.99,
        }
    }
}

impl SignificanceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_e", self.alpha_e),
            ("alpha_l", self.alpha_l),
            ("alpha_h", self.alpha_h),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        Ok(())
    }

    /// Largest p-value a coefficient may have and still count as significant.
    pub fn coef_threshold(&self) -> f64 {
        1.0 - self.alpha_e
    }

    pub fn linearity_threshold(&self) -> f64 {
        1.0 - self.alpha_l
    }

    pub fn hetero_threshold(&self) -> f64 {
        1.0 - self.alpha_h
    }
}

/// Which test families decide feasibility. Disabled tests are still computed
/// and reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnabledTests {
    pub coefficients: bool,
    pub linearity: bool,
    pub heteroscedasticity: bool,
}

impl Default for EnabledTests {
    fn default() -> Self {
        EnabledTests {
            coefficients: true,
            linearity: true,
            heteroscedasticity: true,
        }
    }
}

impl EnabledTests {
    pub fn none() -> Self {
        EnabledTests {
            coefficients: false,
            linearity: false,
            heteroscedasticity: false,
        }
    }

    pub fn coefficients_only() -> Self {
        EnabledTests {
            coefficients: true,
            linearity: false,
            heteroscedasticity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub coef_pvalues: Vec<f64>,
    /// Number of insignificant coefficients.
    pub pi: usize,
    /// Mean p-value of the insignificant coefficients, 0 when there are none.
    pub e: f64,
    pub r_l: f64,
    pub linearity_slope: f64,
    pub p_abs_residual: f64,
    pub p_breusch_pagan: f64,
    /// `max(p_abs_residual, p_breusch_pagan)`.
    pub r_h: f64,
    pub passes_ttests: bool,
    pub passes_linearity: bool,
    pub passes_hetero: bool,
    pub feasible: bool,
    /// False when the fit was rank deficient or a component test failed.
    pub usable: bool,
}

/// `(pi, E)` for a set of coefficient p-values.
pub fn count_violations(pvalues: &[f64], cfg: &SignificanceConfig) -> (usize, f64) {
    let thr = cfg.coef_threshold();
    let bad: Vec<f64> = pvalues.iter().copied().filter(|&p| p > thr).collect();
    if bad.is_empty() {
        (0, 0.0)
    } else {
        (bad.len(), bad.iter().sum::<f64>() / bad.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefTests {
    pub pvalues: Vec<f64>,
    pub pi: usize,
    pub e: f64,
}

pub fn coef_t_tests(fit: &FitResult, cfg: &SignificanceConfig) -> Result<CoefTests> {
    let t = fit
        .t_statistics()
        .ok_or_else(|| Error::RankDeficient(format!("subset {:?}", fit.subset)))?;
    let pvalues = t
        .iter()
        .map(|&t| student_t_two_sided_pvalue(t, fit.dof))
        .collect::<Result<Vec<f64>>>()?;
    let (pi, e) = count_violations(&pvalues, cfg);
    Ok(CoefTests { pvalues, pi, e })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeTest {
    pub slope: f64,
    pub pvalue: f64,
}

/// Simple regression `y = c + slope x` with a two-sided t-test on the slope.
/// Returns `None` when `x` has no variance.
pub fn slope_test(x: &[f64], y: &[f64]) -> Option<SlopeTest> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let x_scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if sxx <= 1e-24 * nf * x_scale.max(1e-300).powi(2) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let s2 = sse / (nf - 2.0);
    let pvalue = if s2 <= 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = slope / (s2 / sxx).sqrt();
        student_t_two_sided_pvalue(t, n - 2).unwrap_or(1.0)
    };
    Some(SlopeTest { slope, pvalue })
}

/// Residuals regressed on fitted values. A constant fitted vector cannot show
/// a linear trend and yields `slope = 0, pvalue = 1`.
pub fn linearity_test(fit: &FitResult) -> SlopeTest {
    slope_test(&fit.fitted, &fit.residuals).unwrap_or(SlopeTest {
        slope: 0.0,
        pvalue: 1.0,
    })
}

/// Absolute residuals regressed on fitted values.
pub fn abs_residual_test(fit: &FitResult) -> SlopeTest {
    let abs: Vec<f64> = fit.residuals.iter().map(|r| r.abs()).collect();
    slope_test(&fit.fitted, &abs).unwrap_or(SlopeTest {
        slope: 0.0,
        pvalue: 1.0,
    })
}

/// Breusch–Pagan LM test: squared residuals regressed on the selected columns
/// plus an intercept, `LM = n R²`, referred to chi-square with k dof.
pub fn breusch_pagan_test(dataset: &Dataset, fit: &FitResult) -> Result<f64> {
    if !fit.is_full_rank() {
        return Err(Error::RankDeficient(format!("subset {:?}", fit.subset)));
    }
    let n = fit.residuals.len();
    let sq: Vec<f64> = fit.residuals.iter().map(|r| r * r).collect();
    let mean = sq.iter().sum::<f64>() / n as f64;
    // design columns are mean-zero, so centering the target absorbs the intercept
    let y = DVector::from_iterator(n, sq.iter().map(|v| v - mean));
    let sst = y.norm_squared();
    let scale: f64 = sq.iter().map(|v| v * v).sum();
    if sst <= 1e-24 * scale.max(1e-300) {
        return Ok(1.0);
    }
    let ls = least_squares(&dataset.submatrix(&fit.subset), &y);
    let r2 = (1.0 - ls.sse / sst).clamp(0.0, 1.0);
    chi_square_sf(n as f64 * r2, fit.k())
}

impl DiagnosticsReport {
    /// Applies the decision rules to already computed p-values.
    pub fn assemble(
        coef_pvalues: Vec<f64>,
        linearity: SlopeTest,
        p_abs_residual: f64,
        p_breusch_pagan: f64,
        cfg: &SignificanceConfig,
        enabled: &EnabledTests,
    ) -> DiagnosticsReport {
        let (pi, e) = count_violations(&coef_pvalues, cfg);
        let hthr = cfg.hetero_threshold();
        let hetero_rejects = p_abs_residual < hthr && p_breusch_pagan < hthr;
        let passes_ttests = !enabled.coefficients || pi == 0;
        let linearity_rejects = linearity.pvalue < cfg.linearity_threshold();
        let passes_linearity = !enabled.linearity || !linearity_rejects;
        let passes_hetero = !enabled.heteroscedasticity || !hetero_rejects;
        DiagnosticsReport {
            coef_pvalues,
            pi,
            e,
            r_l: linearity.pvalue,
            linearity_slope: linearity.slope,
            p_abs_residual,
            p_breusch_pagan,
            r_h: p_abs_residual.max(p_breusch_pagan),
            passes_ttests,
            passes_linearity,
            passes_hetero,
            feasible: passes_ttests && passes_linearity && passes_hetero,
            usable: true,
        }
    }
}

/// Runs every test on a fit. Rank-deficient fits produce an unusable,
/// infeasible report with all coefficient p-values set to 1 and a Breusch–Pagan
/// p-value of 0.
pub fn run_diagnostics(
    dataset: &Dataset,
    fit: &FitResult,
    cfg: &SignificanceConfig,
    enabled: &EnabledTests,
) -> DiagnosticsReport {
    let linearity = linearity_test(fit);
    let abs = abs_residual_test(fit);
    let coef = coef_t_tests(fit, cfg);
    let bp = breusch_pagan_test(dataset, fit);
    match (coef, bp) {
        (Ok(coef), Ok(bp)) => {
            DiagnosticsReport::assemble(coef.pvalues, linearity, abs.pvalue, bp, cfg, enabled)
        }
        (coef, bp) => {
            let pvalues = match coef {
                Ok(c) => c.pvalues,
                Err(_) => vec![1.0; fit.k()],
            };
            let mut report = DiagnosticsReport::assemble(
                pvalues,
                linearity,
                abs.pvalue,
                bp.unwrap_or(0.0),
                cfg,
                enabled,
            );
            report.usable = false;
            report.feasible = false;
            report
        }
    }
}
