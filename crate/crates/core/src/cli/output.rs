//! Result files. Every file is written to a temporary sibling and renamed
//! into place, so readers never see a truncated document.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Single-column CSV with header `w`.
pub fn write_weights(path: &Path, w: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["w"])?;
    for v in w {
        out.write_record([v.to_string()])?;
    }
    let bytes = out
        .into_inner()
        .map_err(|e| Error::Internal(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Reads a single-column weight CSV; a non-numeric first row is a header.
pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(file);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 1 {
            return Err(Error::Config(format!(
                "{}: line {} has {} columns, expected 1",
                path.display(),
                line + 1,
                rec.len()
            )));
        }
        match rec[0].trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if line == 0 => {}
            Err(_) => {
                return Err(Error::Config(format!(
                    "{}: line {}: {:?} is not a number",
                    path.display(),
                    line + 1,
                    &rec[0]
                )))
            }
        }
    }
    Ok(out)
}

/// Mean and standard error over replications.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// One aggregate row: a sweep value and method with its per-replication
/// metric values.
pub struct AggregateRow {
    pub axis_value: Option<f64>,
    pub method: String,
    pub failed: usize,
    pub metrics: Vec<BTreeMap<String, f64>>,
}

/// `mean`, `stderr` and `mean ∓ 2·stderr` per metric. Metrics a row lacks are
/// left empty.
pub fn aggregate_csv(axis: &str, rows: &[AggregateRow]) -> Result<Vec<u8>> {
    let mut names: Vec<String> = Vec::new();
    for row in rows {
        for m in &row.metrics {
            for k in m.keys() {
                if !names.contains(k) {
                    names.push(k.clone());
                }
            }
        }
    }
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        axis.to_string(),
        "method".into(),
        "replications".into(),
        "failed".into(),
    ];
    for n in &names {
        for s in ["mean", "stderr", "lo", "hi"] {
            header.push(format!("{n}_{s}"));
        }
    }
    out.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.axis_value.map(|v| v.to_string()).unwrap_or_default(),
            row.method.clone(),
            row.metrics.len().to_string(),
            row.failed.to_string(),
        ];
        for n in &names {
            let vals: Vec<f64> = row
                .metrics
                .iter()
                .filter_map(|m| m.get(n).copied())
                .collect();
            if vals.is_empty() {
                rec.extend(std::iter::repeat_n(String::new(), 4));
                continue;
            }
            let (mean, se) = mean_stderr(&vals);
            rec.extend([mean, se, mean - 2.0 * se, mean + 2.0 * se].map(|v| v.to_string()));
        }
        out.write_record(&rec)?;
    }
    out.into_inner().map_err(|e| Error::Internal(e.to_string()))
}
