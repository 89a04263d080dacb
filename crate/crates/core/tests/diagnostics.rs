mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use regsel_core::diagnostics::{
    abs_residual_test, breusch_pagan_test, chi_square_sf, coef_t_tests, count_violations,
    linearity_test, run_diagnostics, slope_test, student_t_two_sided_pvalue, DiagnosticsReport,
    EnabledTests, SignificanceConfig, SlopeTest,
};
use regsel_core::linalg::{ols_fit, FitResult};

use common::quad::{chi2_oracle, t_oracle};
use common::{instance_sized, pair_legal_subsets};

fn synthetic_fit(fitted: Vec<f64>, residuals: Vec<f64>) -> FitResult {
    let n = fitted.len();
    FitResult {
        subset: vec![0],
        coefficients: vec![1.0],
        sse: residuals.iter().map(|e| e * e).sum(),
        mse: 0.0,
        std_errors: Some(vec![1.0]),
        dof: n - 2,
        n,
        rank: 1,
        residuals,
        fitted,
    }
}

#[test]
fn t_pvalue_against_quadrature() {
    let got = student_t_two_sided_pvalue(2.0, 10).unwrap();
    assert!((got - t_oracle(2.0, 10)).abs() < 1e-8);
    // P(|T_10| >= 2) to 10 digits
    assert!((got - 0.073_388_034_1).abs() < 1e-9);
}

#[test]
fn chi_square_against_quadrature() {
    let got = chi_square_sf(3.7, 5).unwrap();
    assert!((got - chi2_oracle(3.7, 5)).abs() < 1e-8);
}

#[test]
fn t_pvalue_decreases_in_magnitude() {
    for dof in [1, 3, 30] {
        let mut prev = 1.0;
        for i in 1..80 {
            let p = student_t_two_sided_pvalue(0.1 * i as f64, dof).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }
}

#[test]
fn coefficient_counts_from_the_worked_table() {
    let cfg = SignificanceConfig::default();
    let (pi, e) = count_violations(&[0.06, 0.06, 0.06, 0.025, 0.02], &cfg);
    assert_eq!(pi, 3);
    assert!((e - 0.06).abs() < 1e-15);
    let (pi, e) = count_violations(&[0.95, 0.04, 0.04, 0.025, 0.02], &cfg);
    assert_eq!(pi, 1);
    assert!((e - 0.95).abs() < 1e-15);
    assert_eq!(count_violations(&[0.01, 0.049], &cfg), (0, 0.0));
}

#[test]
fn overwhelming_signal_is_significant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let n = 50;
    let x0: Vec<f64> = (0..n).map(|_| u.sample(&mut rng)).collect();
    let x1: Vec<f64> = (0..n).map(|_| u.sample(&mut rng)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 5.0 * x0[i] - 3.0 * x1[i] + 1e-4 * u.sample(&mut rng))
        .collect();
    let ds = regsel_core::Dataset::from_columns(
        &["a".into(), "b".into()],
        &[x0, x1],
        "y",
        &y,
        Default::default(),
    )
    .unwrap();
    let fit = ols_fit(&ds, &[0, 1]).unwrap();
    for t in fit.t_statistics().unwrap() {
        assert!(t.abs() > 100.0);
    }
    let tt = coef_t_tests(&fit, &SignificanceConfig::default()).unwrap();
    assert_eq!((tt.pi, tt.e), (0, 0.0));
}

#[test]
fn t_tests_permute_with_the_subset() {
    let ds = instance_sized(5, 40, 5);
    let cfg = SignificanceConfig::default();
    let a = coef_t_tests(&ols_fit(&ds, &[0, 3, 6]).unwrap(), &cfg).unwrap();
    let b = coef_t_tests(&ols_fit(&ds, &[6, 0, 3]).unwrap(), &cfg).unwrap();
    assert!((a.pvalues[0] - b.pvalues[1]).abs() < 1e-12);
    assert!((a.pvalues[1] - b.pvalues[2]).abs() < 1e-12);
    assert!((a.pvalues[2] - b.pvalues[0]).abs() < 1e-12);
}

#[test]
fn linearity_never_fires_on_least_squares_residuals() {
    let ds = instance_sized(2, 45, 4);
    let cfg = SignificanceConfig::default();
    for k in 1..=4 {
        for s in pair_legal_subsets(4, k) {
            let fit = ols_fit(&ds, &s).unwrap();
            let lt = linearity_test(&fit);
            assert!(lt.slope.abs() < 1e-8);
            assert!((lt.pvalue - 1.0).abs() < 1e-6, "{s:?}: {}", lt.pvalue);
            let d = run_diagnostics(&ds, &fit, &cfg, &EnabledTests::default());
            assert!(d.passes_linearity);
        }
    }
}

#[test]
fn linearity_detects_synthetic_trends() {
    let fitted: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
    let perfect = synthetic_fit(fitted.clone(), fitted.clone());
    assert!(linearity_test(&perfect).pvalue < 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let residuals: Vec<f64> = fitted.iter().map(|f| 0.5 * f + noise.sample(&mut rng)).collect();
    let fit = synthetic_fit(fitted.clone(), residuals.clone());
    let got = linearity_test(&fit);
    // auxiliary regression oracle: closed-form simple regression
    let n = fitted.len() as f64;
    let mx = fitted.iter().sum::<f64>() / n;
    let my = residuals.iter().sum::<f64>() / n;
    let sxy: f64 = fitted.iter().zip(&residuals).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = fitted.iter().map(|x| (x - mx).powi(2)).sum();
    assert!((got.slope - sxy / sxx).abs() < 1e-12);
    assert!(got.pvalue < 0.01);

    let flat = synthetic_fit(vec![1.0; 10], (0..10).map(|i| i as f64).collect());
    assert_eq!(linearity_test(&flat), SlopeTest { slope: 0.0, pvalue: 1.0 });
}

#[test]
fn abs_residual_test_calibration_and_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let reps = 1000;
    let mut rejections = 0;
    for _ in 0..reps {
        let fitted: Vec<f64> = (0..80).map(|_| normal.sample(&mut rng)).collect();
        let residuals: Vec<f64> = (0..80).map(|_| normal.sample(&mut rng)).collect();
        if abs_residual_test(&synthetic_fit(fitted, residuals)).pvalue < 0.01 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!((0.003..=0.03).contains(&rate), "rate {rate}");

    let fitted: Vec<f64> = (1..=20).map(|i| i as f64).collect();
    let exact = synthetic_fit(fitted.clone(), fitted.clone());
    assert!(abs_residual_test(&exact).pvalue < 1e-6);

    let residuals: Vec<f64> = (0..20).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
    let flipped: Vec<f64> = residuals.iter().enumerate().map(|(i, r)| if i % 3 == 0 { -r } else { *r }).collect();
    let a = abs_residual_test(&synthetic_fit(fitted.clone(), residuals)).pvalue;
    let b = abs_residual_test(&synthetic_fit(fitted, flipped)).pvalue;
    assert_eq!(a, b);
}

#[test]
fn breusch_pagan_constructed_cases() {
    let ds = instance_sized(1, 60, 3);
    let mut fit = ols_fit(&ds, &[1]).unwrap();
    // e² affine in the selected column with positive slope
    let col = ds.design().column(1);
    let shift = col.iter().cloned().fold(f64::INFINITY, f64::min).abs() + 0.5;
    fit.residuals = col.iter().map(|a| (a + shift).sqrt()).collect();
    assert!(breusch_pagan_test(&ds, &fit).unwrap() < 1e-4);

    fit.residuals = (0..ds.n()).map(|i| if i % 2 == 0 { 0.7 } else { -0.7 }).collect();
    assert_eq!(breusch_pagan_test(&ds, &fit).unwrap(), 1.0);
}

#[test]
fn report_decision_rules() {
    let cfg = SignificanceConfig::default();
    let all = EnabledTests::default();
    let lin = SlopeTest { slope: 0.0, pvalue: 1.0 };

    let clear = DiagnosticsReport::assemble(vec![0.001], lin, 0.5, 0.5, &cfg, &all);
    assert!(clear.feasible);

    let one = DiagnosticsReport::assemble(vec![0.001], lin, 0.001, 0.5, &cfg, &all);
    assert!(one.passes_hetero && one.feasible);

    let both = DiagnosticsReport::assemble(vec![0.001], lin, 0.001, 0.002, &cfg, &all);
    assert!(!both.passes_hetero && !both.feasible);
    assert_eq!(both.r_h, 0.002);

    let insignificant = DiagnosticsReport::assemble(vec![0.5, 0.01], lin, 0.5, 0.5, &cfg, &all);
    assert_eq!(insignificant.pi, 1);
    assert!(!insignificant.passes_ttests && !insignificant.feasible);
}

#[test]
fn slope_test_needs_spread() {
    assert!(slope_test(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
    assert!(slope_test(&[1.0, 2.0], &[1.0, 2.0]).is_none());
}

#[test]
fn pvalues_stay_in_unit_interval() {
    let ds = instance_sized(6, 40, 4);
    let cfg = SignificanceConfig::default();
    for s in pair_legal_subsets(4, 3) {
        let d = run_diagnostics(&ds, &ols_fit(&ds, &s).unwrap(), &cfg, &EnabledTests::default());
        for p in d
            .coef_pvalues
            .iter()
            .chain([d.r_l, d.p_abs_residual, d.p_breusch_pagan, d.r_h].iter())
        {
            assert!((0.0..=1.0).contains(p));
        }
    }
}
