//! Datasets: an immutable design matrix with an optional response. Rows are
//! the unit of deletion and replication.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Option<DVector<f64>>,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Option<DVector<f64>>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("dataset must have at least one row"));
        }
        if let Some(y) = &y {
            if y.len() != x.nrows() {
                return Err(Error::invalid(format!(
                    "response length {} does not match {} rows",
                    y.len(),
                    x.nrows()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("response contains non-finite values"));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix contains non-finite values"));
        }
        Ok(Self {
            x,
            y,
            column_names: None,
        })
    }

    /// Builds a dataset from row-major feature rows.
    pub fn from_rows(rows: &[Vec<f64>], y: Option<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("ragged feature rows"));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(x, y.map(DVector::from_vec))
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.x.ncols() {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                self.x.ncols()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> Option<&DVector<f64>> {
        self.y.as_ref()
    }

    pub fn response(&self) -> Result<&DVector<f64>> {
        self.y
            .as_ref()
            .ok_or_else(|| Error::invalid("dataset has no response column"))
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.as_ref()?.iter().position(|c| c == name)
    }

    /// Design matrix, optionally with a leading column of ones.
    pub fn design(&self, intercept: bool) -> DMatrix<f64> {
        if !intercept {
            return self.x.clone();
        }
        let (n, p) = self.x.shape();
        DMatrix::from_fn(
            n,
            p + 1,
            |i, j| if j == 0 { 1.0 } else { self.x[(i, j - 1)] },
        )
    }

    /// Dataset whose design has a leading column of ones.
    pub fn with_intercept(&self) -> Self {
        let mut names = self.column_names.clone();
        if let Some(names) = names.as_mut() {
            names.insert(0, "(intercept)".to_string());
        }
        Self {
            x: self.design(true),
            y: self.y.clone(),
            column_names: names,
        }
    }

    /// Same covariates with a replaced response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        let mut out = Self::new(self.x.clone(), Some(y))?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    /// Rows reordered so that row `k` of the result is row `perm[k]` here.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::invalid("not a permutation of the rows"));
        }
        let x = DMatrix::from_fn(n, self.p(), |i, j| self.x[(perm[i], j)]);
        let y = self
            .y
            .as_ref()
            .map(|y| DVector::from_fn(n, |i, _| y[perm[i]]));
        Ok(Self {
            x,
            y,
            column_names: self.column_names.clone(),
        })
    }

    /// Loads a CSV file with a header row. The response column, when named,
    /// is split off; all other columns (or the listed `features`) become the
    /// design matrix. Empty or non-numeric cells are rejected.
    pub fn from_csv(
        path: impl AsRef<Path>,
        response: Option<&str>,
        features: Option<&[String]>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, response, features)
    }

    pub fn from_csv_reader<R: std::io::Read>(
        reader: R,
        response: Option<&str>,
        features: Option<&[String]>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("column {name:?} not found in CSV header")))
        };
        let y_idx = response.map(find).transpose()?;
        let x_idx: Vec<usize> = match features {
            Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_>>()?,
            None => (0..headers.len()).filter(|&j| Some(j) != y_idx).collect(),
        };
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let cell = |j: usize| -> Result<f64> {
                let raw = record.get(j).unwrap_or("").trim();
                if raw.is_empty() {
                    return Err(Error::invalid(format!(
                        "missing value in row {}, column {:?}",
                        line + 1,
                        headers[j]
                    )));
                }
                let v: f64 = raw.parse().map_err(|_| {
                    Error::invalid(format!(
                        "non-numeric value {raw:?} in row {}, column {:?}",
                        line + 1,
                        headers[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "missing or non-finite value in row {}, column {:?}",
                        line + 1,
                        headers[j]
                    )));
                }
                Ok(v)
            };
            rows.push(x_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<_>>>()?);
            if let Some(j) = y_idx {
                ys.push(cell(j)?);
            }
        }
        if rows.is_empty() {
            return Err(Error::invalid("CSV file has no data rows"));
        }
        let names = x_idx.iter().map(|&j| headers[j].clone()).collect();
        Self::from_rows(&rows, y_idx.map(|_| ys))?.with_column_names(names)
    }
}
