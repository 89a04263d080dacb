mod common;

use regsel_core::bounds::{
    bound_context, estimate_big_m, mse_lower_bound, relaxed_ttest_filter, BigMConfig,
};
use regsel_core::diagnostics::{coef_t_tests, SignificanceConfig};
use regsel_core::linalg::ols_fit;

use common::{instance_sized, normal_equations_sse, pair_legal_subsets};

fn max_abs_coef(ds: &regsel_core::Dataset, s: &[usize]) -> f64 {
    ols_fit(ds, s)
        .unwrap()
        .coefficients
        .iter()
        .fold(0.0, |a, c| a.max(c.abs()))
}

#[test]
fn big_m_never_exceeds_enumerated_maximum() {
    for seed in 0..4 {
        let ds = instance_sized(seed, 40, 4);
        for k in 1..=3 {
            let worst = pair_legal_subsets(4, k)
                .iter()
                .map(|s| max_abs_coef(&ds, s))
                .fold(0.0, f64::max);
            let cfg = BigMConfig { seed, ..BigMConfig::default() };
            let got = estimate_big_m(&ds, k, &cfg).unwrap();
            assert!(got <= cfg.safety * worst * (1.0 + 1e-12));
            assert!(got > 0.0);
        }
    }
}

#[test]
fn big_m_grows_with_samples_for_a_fixed_seed() {
    // the first draws of a longer run are the draws of a shorter run
    let ds = instance_sized(3, 40, 5);
    let short = estimate_big_m(&ds, 2, &BigMConfig { num_samples: 5, safety: 1.0, seed: 2 }).unwrap();
    let long = estimate_big_m(&ds, 2, &BigMConfig { num_samples: 80, safety: 1.0, seed: 2 }).unwrap();
    assert!(long >= short);
}

#[test]
fn relaxation_bounds_every_subset() {
    for seed in 0..6 {
        let ds = instance_sized(seed, 35, 4);
        for k in 1..=4 {
            let dof = (ds.n() - k - 1) as f64;
            let best = pair_legal_subsets(4, k)
                .iter()
                .map(|s| normal_equations_sse(&ds, s))
                .fold(f64::INFINITY, f64::min);
            let m_big = estimate_big_m(&ds, k, &BigMConfig::default()).unwrap();
            let b = mse_lower_bound(&ds, k, m_big).unwrap();
            assert!(b.sse_lb <= b.sse_primal + 1e-9);
            assert!(b.mse_lb <= best / dof + 1e-9, "seed {seed} k {k}");
            assert!((b.mse_lb * dof - b.sse_lb).abs() < 1e-9);
        }
    }
}

#[test]
fn relaxation_weakens_as_big_m_grows() {
    let ds = instance_sized(4, 40, 4);
    let mut prev = f64::INFINITY;
    for m in [0.0, 0.05, 0.2, 0.5, 1.0, 3.0, 100.0] {
        let b = mse_lower_bound(&ds, 2, m).unwrap();
        assert!(b.converged);
        assert!(b.mse_lb <= prev + 1e-8, "M={m}");
        prev = b.mse_lb;
    }
    let n = ds.n() as f64;
    assert!((mse_lower_bound(&ds, 2, 0.0).unwrap().mse_lb - (n - 1.0) / (n - 3.0)).abs() < 1e-12);
    assert!(mse_lower_bound(&ds, 2, -1.0).is_err());
    assert!(mse_lower_bound(&ds, 2, f64::NAN).is_err());
}

#[test]
fn filter_rejection_implies_an_insignificant_coefficient() {
    let sig = SignificanceConfig::default();
    let mut rejected = 0;
    for seed in 0..8 {
        let ds = instance_sized(seed, 40, 4);
        for k in 1..=3 {
            let ctx = bound_context(&ds, k, &BigMConfig::default(), &sig, false).unwrap();
            assert!(ctx.threshold() >= 0.0);
            for s in pair_legal_subsets(4, k) {
                let fit = ols_fit(&ds, &s).unwrap();
                if !relaxed_ttest_filter(&fit, &ctx) {
                    rejected += 1;
                    let tt = coef_t_tests(&fit, &sig).unwrap();
                    assert!(tt.pi > 0, "seed {seed} {s:?}");
                }
            }
        }
    }
    assert!(rejected > 0);
}

#[test]
fn context_is_reproducible() {
    let ds = instance_sized(1, 40, 5);
    let sig = SignificanceConfig::default();
    let a = bound_context(&ds, 3, &BigMConfig::default(), &sig, false).unwrap();
    let b = bound_context(&ds, 3, &BigMConfig::default(), &sig, true).unwrap();
    assert_eq!(a, b);
    let n1 = (ds.n() - 1) as f64;
    assert!((a.s_lb - (a.mse_lb / n1).sqrt()).abs() < 1e-15);
}
