//! Run configuration and persisted run records: JSON-lines audit log plus
//! CSV tables with fixed 17-significant-digit formatting so repeated runs
//! are byte-identical.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bargmann::DEFAULT_C_TILDE;
use crate::lie::GroupKind;
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Algebra,
    Area,
    NuNorm,
    Wilson,
    Sweep,
    Potential,
    Probe,
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

/// Full configuration of one run; echoed verbatim into every record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub group_kind: GroupKind,
    pub n: usize,
    /// One or more resolutions, strictly increasing.
    pub kappas: Vec<f64>,
    pub a: [f64; 3],
    pub t_len: f64,
    /// None means adaptive choice from the tail bound.
    pub degree: Option<usize>,
    pub tail_eps: f64,
    pub n_samples: usize,
    pub w_nodes: usize,
    pub seed: u64,
    pub c_tilde: f64,
    pub out_path: Option<String>,
    pub format: OutputFormat,
    /// Separations for the potential table.
    pub r_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            command: Command::Selftest,
            group_kind: GroupKind::Su,
            n: 2,
            kappas: vec![4.0],
            a: [0.5, 0.0, 0.0],
            t_len: 0.5,
            degree: None,
            tail_eps: 1e-6,
            n_samples: 10_000,
            w_nodes: 512,
            seed: 1,
            c_tilde: DEFAULT_C_TILDE,
            out_path: None,
            format: OutputFormat::Jsonl,
            r_values: vec![0.0, 1.0, 2.0, 3.0],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() {
            return Err(Error::InvalidParameter("need at least one kappa".into()));
        }
        if self.kappas.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidParameter("kappa must be positive".into()));
        }
        if self.kappas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("kappa list must be strictly increasing".into()));
        }
        if !(self.t_len > 0.0) {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        if self.a.iter().map(|x| x * x).sum::<f64>() == 0.0 {
            return Err(Error::InvalidParameter("a must be non-zero".into()));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(Error::InvalidParameter("tail_eps must lie in (0, 1)".into()));
        }
        if self.n_samples == 0 || self.w_nodes == 0 {
            return Err(Error::InvalidParameter("n_samples and w_nodes must be positive".into()));
        }
        if !(self.c_tilde > 0.0) {
            return Err(Error::InvalidParameter("c_tilde must be positive".into()));
        }
        let min_n = match self.group_kind {
            GroupKind::Su => 2,
            GroupKind::So => 3,
        };
        if self.n < min_n {
            return Err(Error::InvalidParameter(format!(
                "group size n must be at least {min_n}"
            )));
        }
        Ok(())
    }
}

/// One persisted run: schema version, timestamp, config echo, per-command
/// results, and workspace diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: String,
    pub timestamp: String,
    pub config: RunConfig,
    pub results: serde_json::Value,
    #[serde(default)]
    pub diagnostics: serde_json::Value,
}

impl RunRecord {
    pub fn new(config: &RunConfig, results: serde_json::Value, diagnostics: serde_json::Value) -> RunRecord {
        RunRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config: config.clone(),
            results,
            diagnostics,
        }
    }
}

/// Parses a JSON-lines record, rejecting unknown schema majors.
pub fn parse_record(line: &str) -> Result<RunRecord> {
    let rec: RunRecord = serde_json::from_str(line)?;
    let major = rec.schema_version.split('.').next().unwrap_or("");
    let ours = SCHEMA_VERSION.split('.').next().unwrap();
    if major != ours {
        return Err(Error::InvalidParameter(format!(
            "unsupported record schema version {} (reader supports major {})",
            rec.schema_version, ours
        )));
    }
    Ok(rec)
}

/// Appends one record as a JSON line.
pub fn append_jsonl(path: &Path, record: &RunRecord) -> Result<()> {
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    Ok(())
}

/// Formats a float with 17 significant digits; round-trips losslessly and
/// is byte-stable across runs.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a CSV table with fixed numeric formatting.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut c = RunConfig::default();
        c.kappas = vec![4.0, 4.0];
        assert!(c.validate().is_err());
        c.kappas = vec![4.0, 2.0];
        assert!(c.validate().is_err());
        c.kappas = vec![];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.t_len = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.a = [0.0; 3];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.n = 1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.n_samples = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn record_round_trip_and_schema_gate() {
        let cfg = RunConfig::default();
        let rec = RunRecord::new(&cfg, serde_json::json!({"x": 1.5}), serde_json::json!(null));
        let line = serde_json::to_string(&rec).unwrap();
        let back = parse_record(&line).unwrap();
        assert_eq!(back.schema_version, SCHEMA_VERSION);
        assert_eq!(back.results["x"], 1.5);
        let mut bad = rec.clone();
        bad.schema_version = "2.0".into();
        let line = serde_json::to_string(&bad).unwrap();
        assert!(parse_record(&line).is_err());
    }

    #[test]
    fn g17_format_is_lossless_and_stable() {
        for &x in &[0.1, 1.0 / 3.0, 2.0_f64.sqrt(), 1e-300, -7.25e12, 0.0] {
            let s = fmt_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert_eq!(fmt_g17(x), s);
        }
    }

    #[test]
    fn csv_shape() {
        let table = csv_table(
            &["kappa", "estimate"],
            &[vec![fmt_g17(2.0), fmt_g17(0.5)], vec![fmt_g17(4.0), fmt_g17(0.25)]],
        );
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "kappa,estimate");
        assert!(lines[1].starts_with("2.0000000000000000e0,"));
    }
}
