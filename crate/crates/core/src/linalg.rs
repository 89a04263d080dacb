//! Dense least squares on column subsets of a [`Dataset`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Relative rank tolerance against the largest column norm.
pub const RANK_TOL: f64 = 1e-10;

/// Householder QR with column pivoting on remaining column norms.
struct PivotedQr {
    /// Householder vectors below the diagonal, `R` on and above it.
    qr: DMatrix<f64>,
    /// `perm[i]` is the original column stored at position `i`.
    perm: Vec<usize>,
    /// Scalar factor of each reflector, `H = I - tau v v'` with `v[0] = 1`.
    taus: Vec<f64>,
    rank: usize,
}

impl PivotedQr {
    fn new(a: &DMatrix<f64>) -> PivotedQr {
        let (n, p) = a.shape();
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let steps = n.min(p);
        let mut taus = vec![0.0; steps];

        let max_norm = (0..p).map(|j| qr.column(j).norm()).fold(0.0, f64::max);
        let tol = RANK_TOL * max_norm;
        let mut rank = 0;

        for i in 0..steps {
            // recompute trailing norms; p is small enough that downdating isn't worth it
            let (piv, piv_norm) = (i..p)
                .map(|j| (j, qr.view((i, j), (n - i, 1)).norm()))
                .fold((i, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_norm <= tol {
                break;
            }
            if piv != i {
                qr.swap_columns(i, piv);
                perm.swap(i, piv);
            }

            let alpha = qr[(i, i)];
            let sign = if alpha >= 0.0 { 1.0 } else { -1.0 };
            let beta = -sign * piv_norm;
            let v0 = alpha - beta;
            for r in (i + 1)..n {
                qr[(r, i)] /= v0;
            }
            let tau = (beta - alpha) / beta;
            qr[(i, i)] = beta;
            taus[i] = tau;

            for j in (i + 1)..p {
                let mut dot = qr[(i, j)];
                for r in (i + 1)..n {
                    dot += qr[(r, i)] * qr[(r, j)];
                }
                dot *= tau;
                qr[(i, j)] -= dot;
                for r in (i + 1)..n {
                    let vi = qr[(r, i)];
                    qr[(r, j)] -= dot * vi;
                }
            }
            rank += 1;
        }

        PivotedQr {
            qr,
            perm,
            taus,
            rank,
        }
    }

    /// Applies `Q'` to `y` in place.
    fn q_tr_mul(&self, y: &mut DVector<f64>) {
        let n = self.qr.nrows();
        for i in 0..self.rank {
            let mut dot = y[i];
            for r in (i + 1)..n {
                dot += self.qr[(r, i)] * y[r];
            }
            dot *= self.taus[i];
            y[i] -= dot;
            for r in (i + 1)..n {
                y[r] -= dot * self.qr[(r, i)];
            }
        }
    }

    fn is_full_rank(&self) -> bool {
        self.rank == self.qr.ncols()
    }

    /// Inverse of the leading `rank x rank` block of `R`.
    fn r_inverse(&self) -> DMatrix<f64> {
        let p = self.rank;
        let mut inv = DMatrix::<f64>::zeros(p, p);
        for c in 0..p {
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for j in (i + 1)..=c {
                    s -= self.qr[(i, j)] * inv[(j, c)];
                }
                inv[(i, c)] = s / self.qr[(i, i)];
            }
        }
        inv
    }
}

/// Least-squares solution of `x β ≈ y` for a dense design.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: DVector<f64>,
    pub fitted: DVector<f64>,
    pub sse: f64,
    pub rank: usize,
    /// Diagonal of `(X'X)^{-1}`; `None` when `X` is rank deficient.
    pub inv_gram_diag: Option<Vec<f64>>,
}

/// Solves a least-squares problem. Rank-deficient designs get the minimum-norm
/// solution.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let p = x.ncols();
    if p == 0 {
        return LeastSquares {
            coefficients: DVector::zeros(0),
            fitted: DVector::zeros(y.len()),
            sse: y.norm_squared(),
            rank: 0,
            inv_gram_diag: Some(Vec::new()),
        };
    }
    let qr = PivotedQr::new(x);

    let (coefficients, inv_gram_diag) = if qr.is_full_rank() {
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        let mut z = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = qty[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                s -= qr.qr[(i, j)] * zj;
            }
            z[i] = s / qr.qr[(i, i)];
        }
        let rinv = qr.r_inverse();
        let mut coef = DVector::zeros(p);
        let mut diag = vec![0.0; p];
        for i in 0..p {
            coef[qr.perm[i]] = z[i];
            diag[qr.perm[i]] = rinv.row(i).norm_squared();
        }
        (coef, Some(diag))
    } else {
        let svd = x.clone().svd(true, true);
        let max_sv = svd.singular_values.max();
        let coef = svd
            .solve(y, RANK_TOL * max_sv)
            .unwrap_or_else(|_| DVector::zeros(p));
        (coef, None)
    };

    let fitted = x * &coefficients;
    let sse = (&fitted - y).norm_squared();
    LeastSquares {
        coefficients,
        fitted,
        sse,
        rank: qr.rank,
        inv_gram_diag,
    }
}

/// OLS fit of the response on a column subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub subset: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// `fitted - b`.
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub sse: f64,
    /// `sse / (n - k - 1)`.
    pub mse: f64,
    /// Coefficient standard errors; `None` for rank-deficient subsets.
    pub std_errors: Option<Vec<f64>>,
    pub dof: usize,
    pub n: usize,
    pub rank: usize,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.subset.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.std_errors.is_some()
    }

    pub fn adjusted_r2(&self) -> f64 {
        adjusted_r2(self.sse, self.n, self.k()).expect("dof checked at fit time")
    }

    /// `x̂_j / s_j` for each coefficient, when standard errors exist.
    pub fn t_statistics(&self) -> Option<Vec<f64>> {
        self.std_errors.as_ref().map(|se| {
            self.coefficients
                .iter()
                .zip(se)
                .map(|(c, s)| c / s)
                .collect()
        })
    }
}

pub fn ols_fit(dataset: &Dataset, subset: &[usize]) -> Result<FitResult> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if !dataset.is_pair_legal(subset) {
        return Err(Error::InvalidSubset(format!(
            "{subset:?} repeats a column or selects a column with its log partner"
        )));
    }
    let n = dataset.n();
    let k = subset.len();
    if n < k + 2 {
        return Err(Error::DegreesOfFreedom { n, k });
    }
    let x = dataset.submatrix(subset);
    let ls = least_squares(&x, dataset.response());
    let dof = n - k - 1;
    let mse = ls.sse / dof as f64;
    let residuals: Vec<f64> = ls
        .fitted
        .iter()
        .zip(dataset.response().iter())
        .map(|(f, b)| f - b)
        .collect();
    let std_errors = ls
        .inv_gram_diag
        .as_ref()
        .map(|d| d.iter().map(|v| (mse * v).sqrt()).collect());
    Ok(FitResult {
        subset: subset.to_vec(),
        coefficients: ls.coefficients.iter().copied().collect(),
        residuals,
        fitted: ls.fitted.iter().copied().collect(),
        sse: ls.sse,
        mse,
        std_errors,
        dof,
        n,
        rank: ls.rank,
    })
}

/// Variance inflation factor of column `j` within `subset`.
pub fn vif(dataset: &Dataset, subset: &[usize], j: usize) -> Result<f64> {
    if subset.len() < 2 {
        return Err(Error::InvalidArgument(
            "VIF needs at least two columns".into(),
        ));
    }
    let pos = subset
        .iter()
        .position(|&c| c == j)
        .ok_or_else(|| Error::InvalidArgument(format!("column {j} not in subset")))?;
    let others: Vec<usize> = subset
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pos)
        .map(|(_, &c)| c)
        .collect();
    let target = dataset.design().column(j).into_owned();
    let ls = least_squares(&dataset.submatrix(&others), &target);
    // standardized columns are mean-zero, so SST is the squared norm
    let sst = target.norm_squared();
    let r2 = 1.0 - ls.sse / sst;
    if r2 >= 1.0 - 1e-12 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / (1.0 - r2))
    }
}

/// `1 - (sse/(n-k-1)) / (SST/(n-1))` with `SST = n - 1` for a standardized
/// response.
pub fn adjusted_r2(sse: f64, n: usize, k: usize) -> Result<f64> {
    if n < k + 2 {
        return Err(Error::DegreesOfFreedom { n, k });
    }
    let sst = (n - 1) as f64;
    Ok(1.0 - (sse / (n - k - 1) as f64) / (sst / (n - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LogShift;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(seed: u64, n: usize, m: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0.5..5.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| cols[0][i] - 0.5 * cols[1 % m][i] + rng.random_range(-1.0..1.0))
            .collect();
        let names: Vec<String> = (0..m).map(|j| format!("x{j}")).collect();
        Dataset::from_columns(&names, &cols, "y", &y, LogShift::default()).unwrap()
    }

    /// Normal equations solved by Gaussian elimination, used as an oracle.
    fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
        let p = x.ncols();
        let g = x.transpose() * x;
        let c = x.transpose() * y;
        let mut aug: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| g[(i, j)]).chain([c[i]]).collect())
            .collect();
        for col in 0..p {
            let piv = (col..p)
                .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
                .unwrap();
            aug.swap(col, piv);
            let pivot_row = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r != col {
                    let f = row[col] / pivot_row[col];
                    for (v, pv) in row.iter_mut().zip(&pivot_row).skip(col) {
                        *v -= f * pv;
                    }
                }
            }
        }
        (0..p).map(|i| aug[i][p] / aug[i][i]).collect()
    }

    #[test]
    fn exact_fit_of_identical_column() {
        let x = vec![1.0, 3.0, 2.0, 7.0, 4.0];
        let ds = Dataset::from_columns(&["x".into()], std::slice::from_ref(&x), "y", &x, LogShift::default())
            .unwrap();
        let fit = ols_fit(&ds, &[0]).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(fit.sse < 1e-20);
    }

    #[test]
    fn toy_normal_equations() {
        // n = 5, two columns: hand-solvable 2x2 normal equations
        let x = DMatrix::from_row_slice(5, 2, &[1., 0., 0., 1., 1., 1., 2., 1., 1., 2.]);
        let y = DVector::from_row_slice(&[1., 2., 2., 4., 3.]);
        // X'X = [[7,5],[5,7]], X'y = [14,14] -> β = [7/6, 7/6]
        let ls = least_squares(&x, &y);
        assert!((ls.coefficients[0] - 7.0 / 6.0).abs() < 1e-12);
        assert!((ls.coefficients[1] - 7.0 / 6.0).abs() < 1e-12);
        assert_eq!(ls.rank, 2);
    }

    #[test]
    fn matches_normal_equations_and_invariants() {
        let ds = random_dataset(7, 40, 5);
        for subset in [vec![0], vec![0, 1], vec![2, 6, 8], vec![0, 1, 2, 3, 9]] {
            let fit = ols_fit(&ds, &subset).unwrap();
            let x = ds.submatrix(&subset);
            let oracle = normal_equations(&x, ds.response());
            for (a, b) in fit.coefficients.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
            }
            let n = ds.n() as f64;
            for (i, r) in fit.residuals.iter().enumerate() {
                assert!((r - (fit.fitted[i] - ds.response()[i])).abs() < 1e-10);
            }
            let sse: f64 = fit.residuals.iter().map(|r| r * r).sum();
            assert!((sse - fit.sse).abs() <= 1e-10 * sse.max(1.0));
            for &j in &subset {
                let dot: f64 = ds.design().column(j).iter().zip(&fit.residuals).map(|(a, r)| a * r).sum();
                assert!(dot.abs() <= 1e-8 * n);
            }
            let rf: f64 = fit.residuals.iter().zip(&fit.fitted).map(|(a, b)| a * b).sum();
            assert!(rf.abs() <= 1e-8 * n);
            // standard errors from the explicit inverse
            let ginv = (x.transpose() * &x).try_inverse().unwrap();
            for (i, se) in fit.std_errors.as_ref().unwrap().iter().enumerate() {
                let want = (fit.mse * ginv[(i, i)]).sqrt();
                assert!((se - want).abs() < 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn permutation_invariance() {
        let ds = random_dataset(11, 30, 4);
        let a = ols_fit(&ds, &[0, 1, 6]).unwrap();
        let b = ols_fit(&ds, &[6, 0, 1]).unwrap();
        let sa = a.std_errors.unwrap();
        let sb = b.std_errors.unwrap();
        assert!((sa[0] - sb[1]).abs() < 1e-12);
        assert!((sa[2] - sb[0]).abs() < 1e-12);
        assert!((a.coefficients[1] - b.coefficients[2]).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_minimum_norm() {
        let x = DMatrix::from_row_slice(4, 2, &[1., 1., 2., 2., 3., 3., 4., 4.]);
        let y = DVector::from_row_slice(&[1., 2., 3., 4.]);
        let ls = least_squares(&x, &y);
        assert_eq!(ls.rank, 1);
        assert!(ls.inv_gram_diag.is_none());
        assert!((ls.coefficients[0] - 0.5).abs() < 1e-10);
        assert!((ls.coefficients[1] - 0.5).abs() < 1e-10);
        assert!(ls.sse < 1e-20);
    }

    #[test]
    fn fit_errors() {
        let ds = random_dataset(3, 5, 4);
        assert!(matches!(ols_fit(&ds, &[]), Err(Error::EmptySubset)));
        assert!(matches!(ols_fit(&ds, &[0, 4]), Err(Error::InvalidSubset(_))));
        assert!(matches!(
            ols_fit(&ds, &[0, 1, 2, 3]),
            Err(Error::DegreesOfFreedom { .. })
        ));
        assert!(ols_fit(&ds, &[0, 1, 2]).is_ok());
    }

    #[test]
    fn vif_cases() {
        // orthogonal, mean-zero columns
        let a = vec![1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let y = vec![0.3, 1.0, -2.0, 0.5];
        let ds = Dataset::from_columns(
            &["a".into(), "b".into()],
            &[a.clone(), b],
            "y",
            &y,
            LogShift::Always,
        )
        .unwrap();
        assert!((vif(&ds, &[0, 1], 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(vif(&ds, &[0, 0], 0).unwrap().is_infinite());
        assert!(vif(&ds, &[0, 1], 3).is_err());
        assert!(vif(&ds, &[0], 0).is_err());

        // correlated pair: VIF = 1/(1-ρ²)
        let ds = random_dataset(5, 50, 2);
        let c0 = ds.design().column(0);
        let c1 = ds.design().column(1);
        let rho = c0.dot(&c1) / (c0.norm() * c1.norm());
        let want = 1.0 / (1.0 - rho * rho);
        assert!((vif(&ds, &[0, 1], 0).unwrap() - want).abs() < 1e-8);
        assert!(vif(&ds, &[0, 1], 1).unwrap() >= 1.0);
    }

    #[test]
    fn adjusted_r2_values() {
        assert_eq!(adjusted_r2(0.0, 11, 2).unwrap(), 1.0);
        assert!((adjusted_r2(10.0, 11, 2).unwrap() - (-0.25)).abs() < 1e-15);
        assert!(adjusted_r2(3.0, 11, 3).unwrap() < adjusted_r2(3.0, 11, 2).unwrap());
        assert!(adjusted_r2(1.0, 4, 3).is_err());
    }

    #[test]
    fn nested_sse_monotone() {
        let ds = random_dataset(21, 25, 5);
        let s = ols_fit(&ds, &[1, 2]).unwrap();
        let t = ols_fit(&ds, &[1, 2, 8, 0]).unwrap();
        assert!(t.sse <= s.sse + 1e-9);
    }
}
