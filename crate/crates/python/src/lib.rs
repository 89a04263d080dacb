//! Python bindings for regsel.

use std::fs::File;
use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use regsel_core::altsol;
use regsel_core::baselines;
use regsel_core::cli::{solve_method, Method};
use regsel_core::data::{load_table, preprocess, LogShift, TableFormat};
use regsel_core::diagnostics;
use regsel_core::report::OutcomeReport;
use regsel_core::solver::SolveOutcome;
use regsel_core::{Error, SolverConfig};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Preprocessed dataset: standardized columns, their log partners and the
/// standardized response.
#[pyclass(name = "Dataset", module = "regsel", frozen)]
struct PyDataset {
    inner: regsel_core::Dataset,
    id: String,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (names, columns, response, response_name = "y"))]
    fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        response: Vec<f64>,
        response_name: &str,
    ) -> PyResult<Self> {
        let inner = regsel_core::Dataset::from_columns(
            &names,
            &columns,
            response_name,
            &response,
            LogShift::default(),
        )
        .map_err(py_err)?;
        Ok(PyDataset {
            inner,
            id: "dataset".into(),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, response, delimiter = ','))]
    fn from_csv(path: &str, response: &str, delimiter: char) -> PyResult<Self> {
        if !delimiter.is_ascii() {
            return Err(PyValueError::new_err("delimiter must be ASCII"));
        }
        let file = File::open(path).map_err(|e| py_err(e.into()))?;
        let raw = load_table(
            file,
            TableFormat {
                delimiter: delimiter as u8,
            },
        )
        .map_err(py_err)?;
        let inner = preprocess(&raw, response, LogShift::default()).map_err(py_err)?;
        let id = std::path::Path::new(path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Ok(PyDataset { inner, id })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    /// Names of the 2m augmented columns.
    #[getter]
    fn column_names(&self) -> Vec<String> {
        (0..self.inner.n_columns())
            .map(|j| self.inner.column_name(j).to_string())
            .collect()
    }

    fn pair(&self, j: usize) -> PyResult<usize> {
        if j >= self.inner.n_columns() {
            return Err(PyValueError::new_err(format!("column {j} out of range")));
        }
        Ok(self.inner.pair(j))
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

#[pyclass(name = "Outcome", module = "regsel", frozen)]
struct PyOutcome {
    inner: SolveOutcome,
    report: OutcomeReport,
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn status(&self) -> &'static str {
        self.inner.status.as_str()
    }

    /// Solution columns, or the alternative's when there is no solution.
    #[getter]
    fn subset(&self) -> Option<Vec<usize>> {
        self.inner.selected().map(|s| s.to_vec())
    }

    #[getter]
    fn names(&self) -> Option<Vec<String>> {
        let model = match (&self.report.solution, &self.report.alternative) {
            (Some(s), _) => s,
            (None, Some(a)) => &a.model,
            _ => return None,
        };
        Some(model.names.clone())
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.status.is_feasible()
    }

    #[getter]
    fn coefficients(&self) -> Option<Vec<f64>> {
        self.inner.selected_fit().map(|f| f.coefficients.clone())
    }

    #[getter]
    fn sse(&self) -> Option<f64> {
        self.inner.selected_fit().map(|f| f.sse)
    }

    #[getter]
    fn adjusted_r2(&self) -> Option<f64> {
        self.inner.selected_fit().map(|f| f.adjusted_r2())
    }

    #[getter]
    fn coef_pvalues(&self) -> Option<Vec<f64>> {
        self.inner
            .selected_diagnostics()
            .map(|d| d.coef_pvalues.clone())
    }

    #[getter]
    fn nodes_explored(&self) -> usize {
        self.inner.nodes_explored
    }

    #[getter]
    fn cuts_added(&self) -> usize {
        self.inner.cuts_added
    }

    #[getter]
    fn wall_time(&self) -> f64 {
        self.inner.wall_time
    }

    fn to_json(&self) -> PyResult<String> {
        self.report.to_json().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let subset = match self.inner.selected() {
            Some(s) => format!("{s:?}"),
            None => "None".into(),
        };
        format!(
            "Outcome(status={:?}, subset={subset})",
            self.inner.status.as_str()
        )
    }
}

/// Best k-subset regression. `method` is one of lazy, base, penalty, fs, iter.
#[pyfunction]
#[pyo3(signature = (
    dataset, k, method = "lazy", alpha_e = 0.95, alpha_l = 0.99, alpha_h = 0.99,
    time_limit = 600.0, threads = 1, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    dataset: &PyDataset,
    k: usize,
    method: &str,
    alpha_e: f64,
    alpha_l: f64,
    alpha_h: f64,
    time_limit: f64,
    threads: usize,
    seed: u64,
) -> PyResult<PyOutcome> {
    let method: Method = method.parse().map_err(py_err)?;
    if !(time_limit.is_finite() && time_limit >= 0.0) {
        return Err(PyValueError::new_err("time_limit must be >= 0"));
    }
    let mut cfg = SolverConfig {
        time_limit: Duration::from_secs_f64(time_limit),
        threads,
        ..SolverConfig::default()
    };
    cfg.significance.alpha_e = alpha_e;
    cfg.significance.alpha_l = alpha_l;
    cfg.significance.alpha_h = alpha_h;
    cfg.big_m.seed = seed;

    let ds = &dataset.inner;
    let (outcome, trace) = py
        .detach(|| solve_method(ds, method, k, &cfg))
        .map_err(py_err)?;
    let report = OutcomeReport::new(
        &dataset.id,
        ds,
        method.as_str(),
        k,
        &outcome,
        trace.as_ref(),
        &cfg,
    );
    Ok(PyOutcome {
        inner: outcome,
        report,
    })
}

#[pyfunction]
fn forward_select(dataset: &PyDataset, k: usize) -> PyResult<Vec<usize>> {
    baselines::forward_select(&dataset.inner, k)
        .map(|s| s.indices().to_vec())
        .map_err(py_err)
}

/// Two-sided Student t p-value.
#[pyfunction]
fn t_pvalue(t: f64, dof: usize) -> PyResult<f64> {
    diagnostics::student_t_two_sided_pvalue(t, dof).map_err(py_err)
}

/// Upper tail of the chi-square distribution.
#[pyfunction]
fn chi2_sf(x: f64, dof: usize) -> PyResult<f64> {
    diagnostics::chi_square_sf(x, dof).map_err(py_err)
}

#[pyfunction]
fn w1(p: f64, alpha: f64) -> f64 {
    altsol::w1(p, alpha)
}

#[pyfunction]
fn w2(p: f64, alpha: f64) -> f64 {
    altsol::w2(p, alpha)
}

#[pymodule]
fn regsel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(forward_select, m)?)?;
    m.add_function(wrap_pyfunction!(t_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    m.add_function(wrap_pyfunction!(w2, m)?)?;
    Ok(())
}
