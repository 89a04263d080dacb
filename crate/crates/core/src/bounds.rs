//! Coefficient magnitude bound, the continuous relaxation lower bound on the
//! MSE of any k-subset, and the relaxed coefficient t-test derived from it.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::diagnostics::{student_t_critical, SignificanceConfig};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, FitResult};

pub const RELAXATION_MAX_ITERS: usize = 10_000;
/// Relative duality gap at which the relaxation counts as solved.
pub const RELAXATION_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigMConfig {
    pub num_samples: usize,
    pub safety: f64,
    pub seed: u64,
}

impl Default for BigMConfig {
    fn default() -> Self {
        BigMConfig {
            num_samples: 50,
            safety: 2.0,
            seed: 0,
        }
    }
}

fn check_k(dataset: &Dataset, k: usize) -> Result<()> {
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

/// Uniformly random pair-legal k-subset: k distinct pairs, then one side of
/// each pair.
pub fn sample_pair_legal<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<usize> {
    let mut subset: Vec<usize> = index::sample(rng, m, k)
        .into_iter()
        .map(|p| if rng.random_bool(0.5) { p + m } else { p })
        .collect();
    subset.sort_unstable();
    subset
}

/// Samples pair-legal subsets and returns `safety * max |coefficient|`.
pub fn estimate_big_m(dataset: &Dataset, k: usize, cfg: &BigMConfig) -> Result<f64> {
    estimate_big_m_with(dataset, k, cfg, false)
}

pub(crate) fn estimate_big_m_with(
    dataset: &Dataset,
    k: usize,
    cfg: &BigMConfig,
    parallel: bool,
) -> Result<f64> {
    check_k(dataset, k)?;
    if cfg.num_samples == 0 {
        return Err(Error::Config("big-M sampling needs at least one sample".into()));
    }
    if cfg.safety.is_nan() || cfg.safety <= 0.0 {
        return Err(Error::Config(format!(
            "big-M safety factor must be positive, got {}",
            cfg.safety
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let subsets: Vec<Vec<usize>> = (0..cfg.num_samples)
        .map(|_| sample_pair_legal(&mut rng, dataset.m(), k))
        .collect();
    let max_abs = |s: &Vec<usize>| -> f64 {
        least_squares(&dataset.submatrix(s), dataset.response())
            .coefficients
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max)
    };
    let max = if parallel {
        subsets.par_iter().map(max_abs).reduce(|| 0.0, f64::max)
    } else {
        subsets.iter().map(max_abs).fold(0.0, f64::max)
    };
    Ok(cfg.safety * max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseBound {
    pub mse_lb: f64,
    /// Certified lower bound on the relaxation's optimal SSE.
    pub sse_lb: f64,
    /// Best primal objective reached.
    pub sse_primal: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the gap closed. The bound
    /// is still valid, only weaker.
    pub converged: bool,
}

/// Feasible set of the relaxation: `Σ|x| <= k M` and `|x_j| + |x_pair(j)| <= M`.
struct RelaxedSet {
    m: usize,
    k: usize,
    big_m: f64,
}

impl RelaxedSet {
    /// Shrink the magnitudes of one pair by `theta`, then onto the pair budget.
    fn pair_magnitudes(&self, u1: f64, u2: f64, theta: f64) -> (f64, f64) {
        let s1 = (u1 - theta).max(0.0);
        let s2 = (u2 - theta).max(0.0);
        if s1 + s2 <= self.big_m {
            return (s1, s2);
        }
        let (hi, lo, swapped) = if s1 >= s2 { (s1, s2, false) } else { (s2, s1, true) };
        let (a, b) = if hi - lo >= self.big_m {
            (self.big_m, 0.0)
        } else {
            let mu = 0.5 * (hi + lo - self.big_m);
            (hi - mu, lo - mu)
        };
        if swapped {
            (b, a)
        } else {
            (a, b)
        }
    }

    fn shrink(&self, v: &DVector<f64>, theta: f64, out: &mut DVector<f64>) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        for j in 0..m {
            let (a, b) = self.pair_magnitudes(v[j].abs(), v[j + m].abs(), theta);
            out[j] = a.copysign(v[j]);
            out[j + m] = b.copysign(v[j + m]);
            total += a + b;
        }
        total
    }

    /// Euclidean projection. The global L1 multiplier is found by bisection;
    /// for a fixed multiplier the problem separates per pair.
    fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        let budget = self.k as f64 * self.big_m;
        if self.shrink(v, 0.0, &mut out) <= budget {
            return out;
        }
        let mut lo = 0.0;
        let mut hi = v.amax();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.shrink(v, mid, &mut out) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi.max(1.0) {
                break;
            }
        }
        self.shrink(v, hi, &mut out);
        out
    }

    /// `min_{y in set} g·y`: each pair contributes at most `M` of magnitude on
    /// its larger gradient entry, and only the best `k` pairs are used.
    fn linear_min(&self, g: &DVector<f64>) -> f64 {
        let m = self.m;
        let mut per_pair: Vec<f64> = (0..m).map(|j| g[j].abs().max(g[j + m].abs())).collect();
        per_pair.sort_unstable_by(|a, b| b.total_cmp(a));
        -self.big_m * per_pair.iter().take(self.k).sum::<f64>()
    }
}

/// Quadratic `‖A x − b‖²` in Gram form.
struct Quadratic {
    gram: DMatrix<f64>,
    atb: DVector<f64>,
    btb: f64,
}

impl Quadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        (x.dot(&(&self.gram * x)) - 2.0 * self.atb.dot(x) + self.btb).max(0.0)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.gram * x - &self.atb) * 2.0
    }

    fn lipschitz(&self) -> f64 {
        // power iteration on the PSD Gram matrix
        let p = self.gram.nrows();
        let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
        let mut lambda = 0.0;
        for _ in 0..100 {
            let w = &self.gram * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 1.0;
            }
            lambda = norm;
            v = w / norm;
        }
        2.0 * lambda * 1.05
    }
}

/// Lower bound on the MSE of every pair-legal k-subset, from the continuous
/// relaxation of the selection problem. Solved by accelerated projected
/// gradient; the returned value is the best certified dual bound, never the
/// primal estimate, so it stays valid if the iteration cap is reached.
pub fn mse_lower_bound(dataset: &Dataset, k: usize, big_m: f64) -> Result<MseBound> {
    check_k(dataset, k)?;
    if !(big_m.is_finite() && big_m >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "big-M must be finite and non-negative, got {big_m}"
        )));
    }
    let a = dataset.design();
    let b = dataset.response();
    let dof = (dataset.n() - k - 1) as f64;
    let full_sse = least_squares(a, b).sse;

    let quad = Quadratic {
        gram: a.transpose() * a,
        atb: a.transpose() * b,
        btb: b.norm_squared(),
    };
    let set = RelaxedSet {
        m: dataset.m(),
        k,
        big_m,
    };

    if big_m == 0.0 {
        return Ok(MseBound {
            mse_lb: quad.btb / dof,
            sse_lb: quad.btb,
            sse_primal: quad.btb,
            iterations: 0,
            converged: true,
        });
    }

    let p = a.ncols();
    let mut lip = quad.lipschitz();
    let mut x = DVector::zeros(p);
    let mut fx = quad.value(&x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut best_lb = full_sse;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < RELAXATION_MAX_ITERS {
        iterations += 1;
        let fy = quad.value(&y);
        let gy = quad.gradient(&y);
        let x_new = loop {
            let cand = set.project(&(&y - &gy / lip));
            let d = &cand - &y;
            let model = fy + gy.dot(&d) + 0.5 * lip * d.norm_squared();
            if quad.value(&cand) <= model + 1e-12 * fy.max(1.0) {
                break cand;
            }
            lip *= 2.0;
        };
        let f_new = quad.value(&x_new);

        // adaptive restart when the objective goes up
        if f_new > fx {
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
        t = t_new;
        let f_change = fx - f_new;
        x = x_new;
        fx = f_new;

        let gx = quad.gradient(&x);
        let dual = fx - gx.dot(&x) + set.linear_min(&gx);
        if dual > best_lb {
            best_lb = dual;
        }
        let scale = fx.max(f64::MIN_POSITIVE);
        if fx - best_lb <= RELAXATION_GAP_TOL * scale
            || (f_change <= RELAXATION_GAP_TOL * scale && fx - best_lb <= 1e-6 * scale)
        {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "relaxation stopped after {iterations} iterations with gap {:.3e}",
            fx - best_lb
        );
    }
    let sse_lb = best_lb.clamp(0.0, fx);
    Ok(MseBound {
        mse_lb: sse_lb / dof,
        sse_lb,
        sse_primal: fx,
        iterations,
        converged,
    })
}

/// Constants of the relaxed t-test for a fixed k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub k: usize,
    pub big_m: f64,
    pub mse_lb: f64,
    /// Lower bound on every coefficient standard error of a k-subset:
    /// `sqrt(mse_lb / (n - 1))`. The `1/(n-1)` is the smallest possible
    /// diagonal entry of `(A_S'A_S)^{-1}` for columns of squared norm `n - 1`
    /// (a VIF of 1).
    pub s_lb: f64,
    pub t_crit: f64,
    pub relaxation_converged: bool,
}

impl BoundContext {
    pub fn threshold(&self) -> f64 {
        self.t_crit * self.s_lb
    }
}

pub fn bound_context(
    dataset: &Dataset,
    k: usize,
    big_m_cfg: &BigMConfig,
    sig: &SignificanceConfig,
    parallel: bool,
) -> Result<BoundContext> {
    let big_m = estimate_big_m_with(dataset, k, big_m_cfg, parallel)?;
    let bound = mse_lower_bound(dataset, k, big_m)?;
    let dof = dataset.n() - k - 1;
    let t_crit = student_t_critical(sig.coef_threshold(), dof)?;
    let diag_lb = 1.0 / (dataset.n() - 1) as f64;
    Ok(BoundContext {
        k,
        big_m,
        mse_lb: bound.mse_lb,
        s_lb: (bound.mse_lb * diag_lb).sqrt(),
        t_crit,
        relaxation_converged: bound.converged,
    })
}

/// False means some selected coefficient is provably insignificant: its
/// magnitude is below `t_crit * s_lb <= t_crit * s_j`.
pub fn relaxed_ttest_filter(fit: &FitResult, ctx: &BoundContext) -> bool {
    let thr = ctx.threshold();
    fit.coefficients.iter().all(|c| c.abs() >= thr)
}
