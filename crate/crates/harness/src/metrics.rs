//! Per-round metrics. `metrics.csv` holds only values that are a pure
//! function of the config, so repeated runs compare byte for byte; wall
//! time goes to `timings.csv`.

use crate::config::ExperimentConfig;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashCheck {
    Pass,
    Fail,
    /// Empty round, nothing aggregated.
    Skipped,
}

impl fmt::Display for HashCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashCheck::Pass => "pass",
            HashCheck::Fail => "fail",
            HashCheck::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// Counted rounds so far; empty rounds repeat the previous value.
    pub round: usize,
    /// Protocol round id, strictly increasing.
    pub attempt: usize,
    pub accuracy: f64,
    pub loss: f64,
    pub submitted: usize,
    pub dropped: usize,
    pub delivered: usize,
    pub rejected_signatures: usize,
    pub included: usize,
    pub hash_check: HashCheck,
    pub wall_seconds: f64,
}

pub const METRICS_COLUMNS: [&str; 10] = [
    "round",
    "attempt",
    "accuracy",
    "loss",
    "submitted",
    "dropped",
    "delivered",
    "rejected_signatures",
    "included",
    "hash_check",
];

/// `#`-prefixed TOML config block, then RFC 4180 rows.
pub fn metrics_csv(cfg: &ExperimentConfig, rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.attempt.to_string(),
            format!("{:.6}", r.accuracy),
            format!("{:.6}", r.loss),
            r.submitted.to_string(),
            r.dropped.to_string(),
            r.delivered.to_string(),
            r.rejected_signatures.to_string(),
            r.included.to_string(),
            r.hash_check.to_string(),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output"));
    out
}

pub fn timings_csv(rows: &[MetricsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["attempt", "wall_seconds"]).expect("in-memory write");
    for r in rows {
        w.write_record([r.attempt.to_string(), format!("{:.6}", r.wall_seconds)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

/// Reads the data rows back, skipping the header block.
pub fn read_metrics(text: &str) -> Result<Vec<csv::StringRecord>, csv::Error> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .records()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_block_then_rows() {
        let cfg = ExperimentConfig::default();
        let row = MetricsRow {
            round: 1,
            attempt: 0,
            accuracy: 0.5,
            loss: 0.69,
            submitted: 10,
            dropped: 0,
            delivered: 10,
            rejected_signatures: 1,
            included: 9,
            hash_check: HashCheck::Pass,
            wall_seconds: 1.25,
        };
        let text = metrics_csv(&cfg, &[row]);
        assert!(text.starts_with("# "));
        assert_eq!(ExperimentConfig::from_metrics_header(&text).unwrap(), cfg);
        let rows = read_metrics(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(&rows[0][2], "0.500000");
        assert_eq!(&rows[0][9], "pass");
        assert!(!text.contains("1.25"));
    }
}
