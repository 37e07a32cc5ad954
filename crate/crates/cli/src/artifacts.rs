//! On-disk formats: the per-round CSV, the per-seed summary JSON and the
//! optional policy log.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use fairlab::benchmark::{BoundCheck, RegretReport};
use fairlab::environments::GeneralizationReport;
use fairlab::types::{AuditOutcome, Policy, RunTrace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;

pub const TRACE_HEADER: [&str; 8] =
    ["t", "err", "unfair", "lagrangian", "audit_rho1", "audit_rho2", "cum_err", "cum_unfair"];

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: line {line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub err: f64,
    pub unfair: u8,
    pub lagrangian: f64,
    pub audit: AuditOutcome,
    pub cum_err: f64,
    pub cum_unfair: u64,
}

impl TraceRow {
    pub fn fields(&self) -> [String; 8] {
        let (r1, r2) = match self.audit {
            AuditOutcome::Pair(a, b) => (a as i64, b as i64),
            AuditOutcome::Null => (-1, -1),
        };
        [
            self.t.to_string(),
            fmt_f64(self.err),
            self.unfair.to_string(),
            fmt_f64(self.lagrangian),
            r1.to_string(),
            r2.to_string(),
            fmt_f64(self.cum_err),
            self.cum_unfair.to_string(),
        ]
    }
}

pub fn trace_rows(trace: &RunTrace) -> Vec<TraceRow> {
    let mut cum_err = 0.0;
    let mut cum_unfair = 0u64;
    trace
        .records
        .iter()
        .map(|r| {
            cum_err += r.err;
            cum_unfair += u64::from(r.unfair);
            TraceRow {
                t: r.t,
                err: r.err,
                unfair: r.unfair,
                lagrangian: r.lagrangian,
                audit: r.audit,
                cum_err,
                cum_unfair,
            }
        })
        .collect()
}

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trace CSV, reporting the first malformed line.
pub fn read_trace_csv<R: Read>(input: R, path: &Path) -> Result<Vec<TraceRow>, ArtifactError> {
    let perr = |line: u64, reason: String| ArtifactError::Parse { path: path.to_path_buf(), line, reason };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(perr(1, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            perr(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != TRACE_HEADER.len() {
            return Err(perr(line, format!("expected {} fields, found {}", TRACE_HEADER.len(), rec.len())));
        }
        let field = |i: usize| &rec[i];
        let float = |i: usize| {
            field(i).parse::<f64>().map_err(|e| perr(line, format!("{}: {e} ({:?})", TRACE_HEADER[i], field(i))))
        };
        let int = |i: usize| {
            field(i).parse::<i64>().map_err(|e| perr(line, format!("{}: {e} ({:?})", TRACE_HEADER[i], field(i))))
        };
        let t = int(0)?;
        let unfair = int(2)?;
        if t < 1 || !(0..=1).contains(&unfair) {
            return Err(perr(line, "t must be positive and unfair must be 0 or 1".into()));
        }
        let audit = match (int(4)?, int(5)?) {
            (-1, -1) => AuditOutcome::Null,
            (a, b) if a >= 0 && b >= 0 && a != b => AuditOutcome::Pair(a as usize, b as usize),
            (a, b) => return Err(perr(line, format!("invalid audit pair ({a}, {b})"))),
        };
        let cum_unfair = int(7)?;
        if cum_unfair < 0 {
            return Err(perr(line, "cum_unfair must be nonnegative".into()));
        }
        rows.push(TraceRow {
            t: t as usize,
            err: float(1)?,
            unfair: unfair as u8,
            lagrangian: float(3)?,
            audit,
            cum_err: float(6)?,
            cum_unfair: cum_unfair as u64,
        });
    }
    Ok(rows)
}

pub fn write_policies_csv<W: Write>(out: W, trace: &RunTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let h = trace.records.first().map_or(0, |r| r.policy.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..h).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.policy.weights().iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_policies_csv<R: Read>(input: R, path: &Path) -> Result<Vec<Policy>, ArtifactError> {
    let perr = |line: u64, reason: String| ArtifactError::Parse { path: path.to_path_buf(), line, reason };
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let w = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| perr(line, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Policy::new(w).map_err(|e| perr(line, e.to_string()))?);
    }
    Ok(out)
}

/// Everything written to `summary.json` for one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub learner: String,
    pub separator_size: usize,
    pub penalty: u64,
    pub gamma: Option<f64>,
    pub omega: Option<f64>,
    pub regret: RegretReport,
    /// Deterministic regret bound of the learner, when it has one.
    pub learner_bound: Option<BoundCheck>,
    pub generalization: Option<GeneralizationReport>,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.regret.all_pass()
            && self.learner_bound.as_ref().is_none_or(|b| b.pass)
            && self.generalization.as_ref().is_none_or(|g| g.all_pass())
    }
}

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed-{seed}"))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, ArtifactError> {
    std::fs::read(path).map_err(|source| ArtifactError::Io { path: path.to_path_buf(), source })
}

pub fn read_summary(path: &Path) -> Result<serde_json::Value, ArtifactError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|source| ArtifactError::Json { path: path.to_path_buf(), source })
}
