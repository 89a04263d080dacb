//! Tabular ingestion and the augmented, standardized design matrix.
//!
//! Every explanatory column `j` in `0..m` is paired with its log transform at
//! `j + m`. Both halves of the matrix and the response are standardized to
//! zero mean and unit sample standard deviation.

use std::collections::BTreeSet;
use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MISSING_TOKENS: [&str; 4] = ["", "na", "nan", "?"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Missing,
    Category(String),
}

impl Cell {
    fn parse(raw: &str) -> Cell {
        let s = raw.trim();
        if MISSING_TOKENS.iter().any(|t| s.eq_ignore_ascii_case(t)) {
            return Cell::Missing;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Category(s.to_string()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: u8,
}

impl Default for TableFormat {
    fn default() -> Self {
        TableFormat { delimiter: b',' }
    }
}

/// Reads delimiter-separated text with a header row.
///
/// Row indices in parse errors are 1-based data rows (the header is row 0).
pub fn load_table<R: Read>(source: R, format: TableFormat) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let column_names: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if column_names.is_empty() || (column_names.len() == 1 && column_names[0].is_empty()) {
        return Err(Error::EmptyTable);
    }

    let mut cells = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: i + 1,
            msg: e.to_string(),
        })?;
        if record.len() != column_names.len() {
            return Err(Error::Parse {
                row: i + 1,
                msg: format!(
                    "expected {} cells, found {}",
                    column_names.len(),
                    record.len()
                ),
            });
        }
        cells.push(record.iter().map(Cell::parse).collect());
    }
    if cells.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(RawTable {
        column_names,
        cells,
    })
}

/// How the log partner of a column is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogShift {
    /// `log(a)` for strictly positive columns, otherwise `log(a + |min a| + 1)`.
    #[default]
    NonPositiveOnly,
    /// Always `log(a - min a + 1)`.
    Always,
}

/// Log-transform of one raw column under the given shift rule.
pub fn log_transform(values: &[f64], policy: LogShift) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = match policy {
        LogShift::NonPositiveOnly if min > 0.0 => 0.0,
        LogShift::NonPositiveOnly => min.abs() + 1.0,
        LogShift::Always => 1.0 - min,
    };
    values.iter().map(|v| (v + shift).ln()).collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standardized regression data with original/log column pairing.
#[derive(Debug, Clone)]
pub struct Dataset {
    n: usize,
    m: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    column_means: Vec<f64>,
    column_stds: Vec<f64>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds the augmented dataset from raw numeric explanatory columns.
    ///
    /// `columns[j]` is the j-th explanatory column (length n). The response is
    /// standardized only; it never gets a log partner.
    pub fn from_columns(
        names: &[String],
        columns: &[Vec<f64>],
        response_name: &str,
        response: &[f64],
        policy: LogShift,
    ) -> Result<Dataset> {
        if names.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::InvalidArgument("no explanatory columns".into()));
        }
        let n = response.len();
        if n < 3 {
            return Err(Error::TooFewObservations(format!(
                "{n} rows after cleaning, need at least 3"
            )));
        }
        if let Some((name, _)) = names.iter().zip(columns).find(|(_, c)| c.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "column `{name}` length differs from response length {n}"
            )));
        }
        let m = columns.len();

        let mut raw_all: Vec<Vec<f64>> = Vec::with_capacity(2 * m);
        raw_all.extend(columns.iter().cloned());
        raw_all.extend(columns.iter().map(|c| log_transform(c, policy)));

        let mut all_names: Vec<String> = names.to_vec();
        all_names.extend(names.iter().map(|nm| format!("log({nm})")));
        all_names.push(response_name.to_string());

        let mut a = DMatrix::<f64>::zeros(n, 2 * m);
        let mut means = Vec::with_capacity(2 * m + 1);
        let mut stds = Vec::with_capacity(2 * m + 1);
        for (j, col) in raw_all.iter().enumerate() {
            let (mu, sd) = mean_std(col);
            if !(sd.is_finite() && sd > 0.0) {
                return Err(Error::ZeroVariance(all_names[j].clone()));
            }
            for (i, v) in col.iter().enumerate() {
                a[(i, j)] = (v - mu) / sd;
            }
            means.push(mu);
            stds.push(sd);
        }
        let (mu, sd) = mean_std(response);
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::ZeroVariance(response_name.to_string()));
        }
        let b = DVector::from_iterator(n, response.iter().map(|v| (v - mu) / sd));
        means.push(mu);
        stds.push(sd);

        Ok(Dataset {
            n,
            m,
            a,
            b,
            column_means: means,
            column_stds: stds,
            names: all_names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of original explanatory columns.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of columns in the augmented matrix (`2m`).
    pub fn n_columns(&self) -> usize {
        2 * self.m
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_stds(&self) -> &[f64] {
        &self.column_stds
    }

    /// Labels for the 2m augmented columns followed by the response.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn response_name(&self) -> &str {
        &self.names[2 * self.m]
    }

    /// Partner of column `j` (original <-> log).
    pub fn pair(&self, j: usize) -> usize {
        if j < self.m {
            j + self.m
        } else {
            j - self.m
        }
    }

    /// Columns of the augmented matrix for the given indices, in order.
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        self.a.select_columns(indices)
    }

    /// True when no index is repeated and no column appears with its partner.
    pub fn is_pair_legal(&self, indices: &[usize]) -> bool {
        let mut seen = BTreeSet::new();
        for &j in indices {
            if j >= 2 * self.m || !seen.insert(j) {
                return false;
            }
        }
        indices.iter().all(|&j| !seen.contains(&self.pair(j)))
    }
}

/// Removes rows with missing cells, one-hot encodes categorical columns and
/// builds the standardized augmented dataset.
pub fn preprocess(raw: &RawTable, response: &str, policy: LogShift) -> Result<Dataset> {
    let resp_idx = raw
        .column_names
        .iter()
        .position(|c| c == response)
        .ok_or_else(|| Error::MissingColumn(response.to_string()))?;

    let rows: Vec<&Vec<Cell>> = raw
        .cells
        .iter()
        .filter(|r| !r.iter().any(Cell::is_missing))
        .collect();
    if rows.len() < 3 {
        return Err(Error::TooFewObservations(format!(
            "{} complete rows, need at least 3",
            rows.len()
        )));
    }

    let response_values = rows
        .iter()
        .enumerate()
        .map(|(i, r)| match &r[resp_idx] {
            Cell::Number(v) => Ok(*v),
            other => Err(Error::InvalidArgument(format!(
                "response `{response}` is not numeric at complete row {}: {other:?}",
                i + 1
            ))),
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (c, name) in raw.column_names.iter().enumerate() {
        if c == resp_idx {
            continue;
        }
        let numeric: Option<Vec<f64>> = rows
            .iter()
            .map(|r| match &r[c] {
                Cell::Number(v) => Some(*v),
                _ => None,
            })
            .collect();
        match numeric {
            Some(col) => {
                names.push(name.clone());
                columns.push(col);
            }
            None => {
                let labels: Vec<String> = rows
                    .iter()
                    .map(|r| match &r[c] {
                        Cell::Number(v) => v.to_string(),
                        Cell::Category(s) => s.clone(),
                        Cell::Missing => unreachable!("missing rows were removed"),
                    })
                    .collect();
                let levels: BTreeSet<&String> = labels.iter().collect();
                if levels.len() < 2 {
                    return Err(Error::ZeroVariance(name.clone()));
                }
                // first level is the reference and gets no column
                for level in levels.into_iter().skip(1) {
                    names.push(format!("{name}={level}"));
                    columns.push(
                        labels
                            .iter()
                            .map(|l| if l == level { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }

    Dataset::from_columns(&names, &columns, response, &response_values, policy)
}
