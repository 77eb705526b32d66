//! Report emission: JSON-lines records plus a CSV mirror of aggregates.
//!
//! Records are append-free and schema-stable; every run also writes its
//! fully resolved config for provenance. All formatting is deterministic, so
//! identical configs produce byte-identical reports.

use std::io::Write;
use std::path::Path;

use featmarket::Metrics;
use serde::Serialize;

use crate::error::CliError;

/// One post-market measurement for a (method, horizon) pair on one split.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    pub record: &'static str,
    pub alpha: Option<f64>,
    pub split: usize,
    pub method: String,
    pub horizon: String,
    pub accuracy: f64,
    pub welfare: Option<f64>,
    pub burden: Option<f64>,
    pub crossed_pos_ratio: Option<f64>,
    pub crossed_neg_ratio: Option<f64>,
    pub rho_used: Option<f64>,
    pub n_movers: Option<usize>,
}

impl MetricsRecord {
    pub fn from_metrics(
        alpha: Option<f64>,
        split: usize,
        method: &str,
        horizon: &str,
        m: &Metrics,
    ) -> Self {
        Self {
            record: "metrics",
            alpha,
            split,
            method: method.into(),
            horizon: horizon.into(),
            accuracy: m.accuracy,
            welfare: Some(m.welfare),
            burden: Some(m.burden),
            crossed_pos_ratio: Some(m.crossed_pos_ratio),
            crossed_neg_ratio: Some(m.crossed_neg_ratio),
            rho_used: Some(m.rho_used),
            n_movers: Some(m.n_movers),
        }
    }

    /// A pre-market benchmark row: accuracy only.
    pub fn benchmark(alpha: Option<f64>, split: usize, method: &str, accuracy: f64) -> Self {
        Self {
            record: "metrics",
            alpha,
            split,
            method: method.into(),
            horizon: "benchmark".into(),
            accuracy,
            welfare: None,
            burden: None,
            crossed_pos_ratio: None,
            crossed_neg_ratio: None,
            rho_used: None,
            n_movers: None,
        }
    }
}

/// One training epoch of one method on one split.
#[derive(Debug, Clone, Serialize)]
pub struct EpochHistoryRecord {
    pub record: &'static str,
    pub split: usize,
    pub method: String,
    pub epoch: usize,
    pub loss: f64,
    pub rho_smooth_mean: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceRecord {
    pub record: &'static str,
    pub rho: f64,
    pub setter_index: Option<usize>,
    pub revenue: f64,
    pub buyers: usize,
    pub profile_size: usize,
    pub source_size: usize,
    pub setter_percentile: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationRecord {
    pub record: &'static str,
    pub rho: f64,
    pub total_revenue: f64,
    pub n_movers: usize,
    pub n_users: usize,
    pub response_mode: String,
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item)
            .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

/// Mean and standard error of every metric over splits, grouped by
/// (alpha, method, horizon) in first-appearance order.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub alpha: Option<f64>,
    pub method: String,
    pub horizon: String,
    pub n: usize,
    pub accuracy: (f64, f64),
    pub welfare: Option<(f64, f64)>,
    pub burden: Option<(f64, f64)>,
    pub crossed_pos_ratio: Option<(f64, f64)>,
    pub crossed_neg_ratio: Option<(f64, f64)>,
    pub rho_used: Option<(f64, f64)>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn optional_mean_se(values: &[Option<f64>]) -> Option<(f64, f64)> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() == values.len() && !present.is_empty() {
        Some(mean_se(&present))
    } else {
        None
    }
}

pub fn aggregate(records: &[MetricsRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Option<f64>, String, String)> = Vec::new();
    for r in records {
        let key = (r.alpha, r.method.clone(), r.horizon.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(alpha, method, horizon)| {
            let group: Vec<&MetricsRecord> = records
                .iter()
                .filter(|r| r.alpha == alpha && r.method == method && r.horizon == horizon)
                .collect();
            let pick = |f: &dyn Fn(&MetricsRecord) -> Option<f64>| {
                optional_mean_se(&group.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            AggregateRow {
                alpha,
                method,
                horizon,
                n: group.len(),
                accuracy: mean_se(&group.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
                welfare: pick(&|r| r.welfare),
                burden: pick(&|r| r.burden),
                crossed_pos_ratio: pick(&|r| r.crossed_pos_ratio),
                crossed_neg_ratio: pick(&|r| r.crossed_neg_ratio),
                rho_used: pick(&|r| r.rho_used),
            }
        })
        .collect()
}

pub fn write_aggregates_csv(path: &Path, rows: &[AggregateRow]) -> Result<(), CliError> {
    let mut out = String::from(
        "alpha,method,horizon,n,accuracy_mean,accuracy_se,welfare_mean,welfare_se,\
         burden_mean,burden_se,crossed_pos_mean,crossed_pos_se,crossed_neg_mean,\
         crossed_neg_se,rho_mean,rho_se\n",
    );
    let fmt_opt = |v: Option<(f64, f64)>| match v {
        Some((m, s)) => format!("{m},{s}"),
        None => ",".into(),
    };
    for row in rows {
        let alpha = row.alpha.map_or(String::new(), |a| format!("{a}"));
        let cells = [
            alpha,
            row.method.clone(),
            row.horizon.clone(),
            row.n.to_string(),
            format!("{},{}", row.accuracy.0, row.accuracy.1),
            fmt_opt(row.welfare),
            fmt_opt(row.burden),
            fmt_opt(row.crossed_pos_ratio),
            fmt_opt(row.crossed_neg_ratio),
            fmt_opt(row.rho_used),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(out.as_bytes())
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}
