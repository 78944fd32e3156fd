use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use polymerlab_core::schedule::ConstraintReport;
use polymerlab_core::serde_ext::ext_f64;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Tag written into every record. Replay refuses records with another tag.
pub const RECORD_VERSION: &str = concat!("polymerlab-", env!("CARGO_PKG_VERSION"), "/record-1");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub std_error: Option<f64>,
}

impl Metric {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: None }
    }

    pub fn estimate(value: f64, std_error: f64) -> Self {
        Self {
            value,
            std_error: std_error.is_finite().then_some(std_error),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub version: String,
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, Metric>,
    pub constraint_report: Option<ConstraintReport>,
    /// Full report of the owning module.
    pub details: Value,
    /// Seconds. Not compared on replay.
    pub wall_time: f64,
}

/// What a command produces before the driver wraps it in a record.
pub struct Outcome {
    pub metrics: BTreeMap<String, Metric>,
    pub constraint_report: Option<ConstraintReport>,
    pub details: Value,
    pub csv: Option<String>,
    pub summary: String,
}

impl Outcome {
    pub fn new(summary: String) -> Self {
        Self {
            metrics: BTreeMap::new(),
            constraint_report: None,
            details: Value::Null,
            csv: None,
            summary,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, m: Metric) -> &mut Self {
        self.metrics.insert(name.into(), m);
        self
    }
}

/// Sibling path for the CSV series: same stem, `.csv` extension.
pub fn csv_path(json: &Path) -> PathBuf {
    json.with_extension("csv")
}

pub fn write_record(record: &ResultRecord, csv: Option<&str>, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(record).expect("records serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
    if let Some(csv) = csv {
        let p = csv_path(path);
        std::fs::write(&p, csv).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

pub fn read_record(path: &Path) -> CliResult<ResultRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let version = raw.get("version").and_then(Value::as_str).unwrap_or("<missing>");
    if version != RECORD_VERSION {
        return Err(CliError::VersionMismatch(format!(
            "record {} has version {version:?}, this build writes {RECORD_VERSION:?}; rerun the experiment with this build instead",
            path.display()
        )));
    }
    serde_json::from_value(raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Largest relative difference between matching metrics, and whether the
/// metric sets and all values agree bit for bit.
pub fn metric_drift(a: &BTreeMap<String, Metric>, b: &BTreeMap<String, Metric>) -> (f64, bool) {
    if a.keys().ne(b.keys()) {
        return (f64::INFINITY, false);
    }
    let mut worst: f64 = 0.0;
    let mut identical = true;
    for (x, y) in a.values().zip(b.values()) {
        let same = |u: f64, v: f64| u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan());
        identical &= same(x.value, y.value) && x.std_error.map(f64::to_bits) == y.std_error.map(f64::to_bits);
        if !same(x.value, y.value) {
            let d = (x.value - y.value).abs() / x.value.abs().max(1.0);
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
        if let (Some(s), Some(t)) = (x.std_error, y.std_error) {
            worst = worst.max((s - t).abs() / s.abs().max(1.0));
        } else if x.std_error.is_some() != y.std_error.is_some() {
            worst = f64::INFINITY;
        }
    }
    (worst, identical)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(v: &[(&str, f64)]) -> BTreeMap<String, Metric> {
        v.iter().map(|&(k, x)| (k.to_string(), Metric::estimate(x, 0.1))).collect()
    }

    #[test]
    fn drift_measure() {
        let a = metrics(&[("x", 1.0), ("y", 2.0)]);
        assert_eq!(metric_drift(&a, &a), (0.0, true));
        let b = metrics(&[("x", 1.0), ("y", 2.0 + 1e-13)]);
        let (d, same) = metric_drift(&a, &b);
        assert!(!same && d < 1e-12 && d > 0.0);
        let c = metrics(&[("x", 1.0)]);
        assert_eq!(metric_drift(&a, &c).0, f64::INFINITY);
    }

    #[test]
    fn non_finite_metrics_round_trip() {
        let m = Metric::exact(f64::INFINITY);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"value":"inf","std_error":null}"#);
        assert_eq!(serde_json::from_str::<Metric>(&s).unwrap(), m);
        assert_eq!(Metric::estimate(1.0, f64::NAN).std_error, None);
    }
}
