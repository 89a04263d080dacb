//! Tail probabilities for the t and chi-square distributions.

use statrs::function::{beta::beta_reg, gamma::gamma_ur};

use crate::error::{Error, Result};

/// `P(|T_dof| >= |t|)`, via the regularized incomplete beta function
/// `I_{dof/(dof+t²)}(dof/2, 1/2)`.
pub fn student_t_two_sided_pvalue(t: f64, dof: usize) -> Result<f64> {
    if dof < 1 {
        return Err(Error::InvalidArgument("t distribution needs dof >= 1".into()));
    }
    if t.is_nan() {
        return Err(Error::InvalidArgument("t statistic is NaN".into()));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let v = dof as f64;
    let x = v / (v + t * t);
    Ok(beta_reg(0.5 * v, 0.5, x).clamp(0.0, 1.0))
}

/// Upper tail `P(X >= x)` of a chi-square variable, `Q(dof/2, x/2)`.
pub fn chi_square_sf(x: f64, dof: usize) -> Result<f64> {
    if dof < 1 {
        return Err(Error::InvalidArgument("chi-square needs dof >= 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "chi-square statistic must be >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(0.5 * dof as f64, 0.5 * x).clamp(0.0, 1.0))
}

/// Two-sided critical value `t_{1-α/2, dof}` for a significance threshold
/// `alpha = 1 - confidence`. Found by bisection on
/// [`student_t_two_sided_pvalue`] so that it agrees with the p-values used by
/// the exact tests.
pub fn student_t_critical(alpha: f64, dof: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0,1), got {alpha}"
        )));
    }
    let p = |t: f64| student_t_two_sided_pvalue(t, dof);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while p(hi)? > alpha {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(hi);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(lo)
}
