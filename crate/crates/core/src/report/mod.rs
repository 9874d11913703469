//! Trace, summary and benchmark table files, plus the command drivers
//! behind the `gadmm` binary.

pub mod cli;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calib::grid::{Series, TableRow};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str =
    "iter,objective,primal_residual,kkt_residual,step_sq_h0,dist_sq_metric,cert_lhs,cert_rhs,time_ns";

pub const TABLE_HEADER: &str =
    "n,algorithm,alpha,beta,g1,g2,iterations_median,cpu_seconds_median,objective_median,epsilon_final_median";

pub const SERIES_HEADER: &str = "series_label,iter,error";

/// Measurements after one iteration (`iter = 0` is the starting point).
///
/// `dist_sq_metric` is `‖u − u*‖²_{H_α}` and is −1 without a reference;
/// `cert_lhs`/`cert_rhs` are the two sides of the per-iteration descent
/// inequality and are −1 when it cannot be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub kkt_residual: f64,
    pub step_sq_h0: f64,
    pub dist_sq_metric: f64,
    pub cert_lhs: f64,
    pub cert_rhs: f64,
    pub time_ns: u64,
}

impl TraceRecord {
    fn write_row(&self, out: &mut String) {
        // `{:?}` prints the shortest decimal that round-trips.
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            self.iter,
            self.objective,
            self.primal_residual,
            self.kkt_residual,
            self.step_sq_h0,
            self.dist_sq_metric,
            self.cert_lhs,
            self.cert_rhs,
            self.time_ns
        );
    }

    fn parse_row(line: &str, lineno: usize) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Trace(format!("line {lineno}: expected 9 fields, got {}", fields.len())));
        }
        let real = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::Trace(format!("line {lineno}: bad number '{}'", fields[i])))
        };
        let int = |i: usize| -> Result<u64> {
            fields[i].parse().map_err(|_| Error::Trace(format!("line {lineno}: bad integer '{}'", fields[i])))
        };
        Ok(Self {
            iter: int(0)? as usize,
            objective: real(1)?,
            primal_residual: real(2)?,
            kkt_residual: real(3)?,
            step_sq_h0: real(4)?,
            dist_sq_metric: real(5)?,
            cert_lhs: real(6)?,
            cert_rhs: real(7)?,
            time_ns: int(8)?,
        })
    }
}

pub fn trace_to_csv(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        r.write_row(&mut out);
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(Error::Trace(format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| TraceRecord::parse_row(l, i + 2))
        .collect()
}

pub fn write_trace_csv(path: &Path, records: &[TraceRecord]) -> Result<()> {
    Ok(fs::write(path, trace_to_csv(records))?)
}

/// Contents of the summary JSON, in output key order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub algorithm: String,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt_residual: f64,
    pub wall_time_ns: u64,
    pub tau_hat: Option<f64>,
    pub seed: u64,
}

impl Summary {
    pub const KEYS: [&'static str; 11] = [
        "algorithm",
        "alpha",
        "beta",
        "n",
        "iterations",
        "converged",
        "objective",
        "kkt_residual",
        "wall_time_ns",
        "tau_hat",
        "seed",
    ];

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_json()?)?)
    }
}

pub fn table_to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let c = &r.cell;
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            c.n,
            c.variant.key(),
            c.alpha,
            c.beta,
            c.g1,
            c.g2,
            r.iterations_median,
            r.cpu_seconds_median,
            r.objective_median,
            r.epsilon_final_median
        );
    }
    out
}

/// Long format: one row per series and iteration (`iter` starts at 1).
pub fn series_to_csv(series: &[Series]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for s in series {
        for (k, e) in s.errors.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:?}", s.label, k + 1, e);
        }
    }
    out
}
