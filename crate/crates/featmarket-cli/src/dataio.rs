//! Dataset file format and budget rescaling.
//!
//! Datasets are UTF-8 comma-separated files with the exact header
//! `feature_0,...,feature_{d-1},budget,label`, decimal points, LF line
//! endings. Ingestion enforces the record rules: finite features, strictly
//! positive budgets, labels in {0, 1}. Feature signs are not constrained:
//! the synthetic constructions place features on signed intervals, and
//! written datasets must reload exactly.

use std::io::Write;
use std::path::Path;

use featmarket::{Dataset, UserRecord};
use thiserror::Error;

use crate::error::CliError;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in {path}: expected column '{expected}' at position {position}, found '{found}'")]
    MissingColumn { path: String, expected: String, position: usize, found: String },
    #[error("row {row}: cannot parse column '{column}' value '{value}'")]
    ParseFailure { row: usize, column: String, value: String },
    #[error("row {row}: {violation}")]
    InvariantViolation { row: usize, violation: String },
}

impl From<DataError> for CliError {
    fn from(err: DataError) -> Self {
        CliError::Input(err.to_string())
    }
}

fn expected_header(d: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..d).map(|i| format!("feature_{i}")).collect();
    cols.push("budget".into());
    cols.push("label".into());
    cols
}

/// Loads and validates a dataset CSV.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io { path: display.clone(), source },
            other => DataError::Io {
                path: display.clone(),
                source: std::io::Error::other(format!("{other:?}")),
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Io { path: display.clone(), source: std::io::Error::other(e) })?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.len() < 3 {
        return Err(DataError::MissingColumn {
            path: display,
            expected: "feature_0,...,budget,label".into(),
            position: headers.len(),
            found: headers.join(","),
        });
    }
    let d = headers.len() - 2;
    for (position, (found, expected)) in headers.iter().zip(expected_header(d)).enumerate() {
        if *found != expected {
            return Err(DataError::MissingColumn {
                path: display,
                expected,
                position,
                found: found.clone(),
            });
        }
    }

    let mut records = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row = i + 1; // 1-based data row
        let record = result.map_err(|e| DataError::ParseFailure {
            row,
            column: "<record>".into(),
            value: e.to_string(),
        })?;
        if record.len() != d + 2 {
            return Err(DataError::InvariantViolation {
                row,
                violation: format!("expected {} fields, found {}", d + 2, record.len()),
            });
        }
        let parse = |idx: usize, column: &str| -> Result<f64, DataError> {
            record[idx].parse::<f64>().map_err(|_| DataError::ParseFailure {
                row,
                column: column.into(),
                value: record[idx].to_string(),
            })
        };
        let mut features = Vec::with_capacity(d);
        for k in 0..d {
            let v = parse(k, &format!("feature_{k}"))?;
            if !v.is_finite() {
                return Err(DataError::InvariantViolation {
                    row,
                    violation: format!("feature_{k} must be finite (got {v})"),
                });
            }
            features.push(v);
        }
        let budget = parse(d, "budget")?;
        if !budget.is_finite() || budget <= 0.0 {
            return Err(DataError::InvariantViolation {
                row,
                violation: format!("budget must be strictly positive (got {budget})"),
            });
        }
        let label_raw = &record[d + 1];
        let label = match label_raw.parse::<f64>() {
            Ok(v) => {
                if v == 0.0 {
                    0u8
                } else if v == 1.0 {
                    1u8
                } else {
                    return Err(DataError::InvariantViolation {
                        row,
                        violation: format!("label must be 0 or 1 (got {v})"),
                    });
                }
            }
            Err(_) => {
                return Err(DataError::ParseFailure {
                    row,
                    column: "label".into(),
                    value: label_raw.to_string(),
                })
            }
        };
        records.push(UserRecord::new(features, budget, label));
    }
    Dataset::with_dim(records, d)
        .map_err(|e| DataError::InvariantViolation { row: 0, violation: e.to_string() })
}

/// Writes a dataset in the documented CSV format (shortest round-trip float
/// formatting, LF endings).
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&expected_header(data.dim()).join(","));
    out.push('\n');
    for rec in data.records() {
        for v in &rec.features {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{},{}\n", rec.budget, rec.label));
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(out.as_bytes())
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

/// Affinely rescales budgets so the minimum maps to 1 and the maximum to
/// `2^alpha`. All-equal budgets map to 1; `alpha = 0` forces everyone to 1.
pub fn rescale_budgets(s: &Dataset, alpha: f64) -> Result<Dataset, CliError> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(CliError::input("rescale exponent must be non-negative"));
    }
    let lo = s.records().iter().map(|r| r.budget).fold(f64::INFINITY, f64::min);
    let hi = s.records().iter().map(|r| r.budget).fold(f64::NEG_INFINITY, f64::max);
    let top = 2f64.powf(alpha);
    let records = s
        .records()
        .iter()
        .map(|r| {
            let budget = if hi > lo { 1.0 + (r.budget - lo) * (top - 1.0) / (hi - lo) } else { 1.0 };
            UserRecord::new(r.features.clone(), budget, r.label)
        })
        .collect();
    Dataset::with_dim(records, s.dim()).map_err(CliError::from)
}
