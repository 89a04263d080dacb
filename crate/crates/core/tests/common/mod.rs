#![allow(dead_code)]

pub mod quad;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regsel_core::data::{Dataset, LogShift};

pub const N: usize = 60;
pub const M: usize = 8;

/// Synthetic instance family. The seed picks one of four regimes so the
/// corpus mixes clean, weak, heteroscedastic and pure-noise responses.
pub fn instance(seed: u64) -> Dataset {
    instance_sized(seed, N, M)
}

pub struct RawInstance {
    pub columns: Vec<Vec<f64>>,
    pub response: Vec<f64>,
}

impl RawInstance {
    pub fn names(&self) -> Vec<String> {
        (0..self.columns.len()).map(|j| format!("x{j}")).collect()
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::from_columns(
            &self.names(),
            &self.columns,
            "y",
            &self.response,
            LogShift::default(),
        )
        .unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.names().join(",") + ",y\n";
        for i in 0..self.response.len() {
            for c in &self.columns {
                out += &format!("{},", c[i]);
            }
            out += &format!("{}\n", self.response[i]);
        }
        out
    }
}

pub fn raw_instance(seed: u64, n: usize, m: usize) -> RawInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0.2..5.0)).collect())
        .collect();
    let response: Vec<f64> = (0..n)
        .map(|i| {
            let signal =
                1.5 * columns[0][i] - 2.0 * columns[1 % m][i].ln() + 0.7 * columns[2 % m][i];
            let eps = noise.sample(&mut rng);
            match seed % 4 {
                0 => signal + 0.8 * eps,
                1 => 0.25 * signal + 2.0 * eps,
                2 => signal + 0.4 * (1.0 + signal.abs()) * eps,
                _ => eps,
            }
        })
        .collect();
    RawInstance { columns, response }
}

pub fn instance_sized(seed: u64, n: usize, m: usize) -> Dataset {
    raw_instance(seed, n, m).dataset()
}

/// Every pair-legal k-subset of the 2m augmented columns, sorted.
pub fn pair_legal_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut pairs = Vec::with_capacity(k);
    fn rec(m: usize, k: usize, start: usize, pairs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pairs.len() == k {
            for sides in 0..(1u32 << k) {
                let mut s: Vec<usize> = pairs
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| if sides >> i & 1 == 1 { p + m } else { p })
                    .collect();
                s.sort_unstable();
                out.push(s);
            }
            return;
        }
        for p in start..m {
            pairs.push(p);
            rec(m, k, p + 1, pairs, out);
            pairs.pop();
        }
    }
    rec(m, k, 0, &mut pairs, &mut out);
    out.sort();
    out
}

/// SSE by the normal equations, independent of the library's QR path.
pub fn normal_equations_sse(ds: &Dataset, subset: &[usize]) -> f64 {
    let x: DMatrix<f64> = ds.submatrix(subset);
    let y: &DVector<f64> = ds.response();
    let gram = x.transpose() * &x;
    let rhs = x.transpose() * y;
    let beta = gram.cholesky().expect("full rank").solve(&rhs);
    (&x * beta - y).norm_squared()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
