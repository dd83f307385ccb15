//! Per-round experiment records, regret accounting, and CSV persistence.
//!
//! CSV schema (one header row, then one row per round):
//! `t,h,g,w,a,sum_g2,sum_a,clip_ratio_sum,regret_u0`.
//! Vector-valued `g`/`w` fields are comma-joined inside one (quoted) CSV
//! field. Every float is printed with 17 significant digits so that parsing
//! reproduces the identical 64-bit value.

use std::path::Path;

use crate::error::{Error, Result};

/// One recorded round of a learner/environment interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Round index, starting at 1.
    pub t: u64,
    /// Magnitude hint in force when the learner produced `w`.
    pub h: f64,
    /// Gradient the learner received (after clipping, when applicable).
    pub g: Vec<f64>,
    /// Learner output for the round.
    pub w: Vec<f64>,
    /// Regularization coefficient for the round (0 when not applicable).
    pub a: f64,
    /// Cumulative sum of squared gradient norms through this round.
    pub sum_g2: f64,
    /// Cumulative sum of regularization coefficients through this round.
    pub sum_a: f64,
    /// Cumulative sum of hint-growth ratios (h_{i+1}-h_i)/h_{i+1}.
    pub clip_ratio_sum: f64,
    /// Cumulative regret against the zero comparator, sum of <g_i, w_i>.
    pub regret_u0: f64,
}

/// Regret-versus-bound verdict for a single comparator.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub comparator: Vec<f64>,
    pub regret: f64,
    /// Evaluated theoretical bound, when an evaluator applies to the run.
    pub bound: Option<f64>,
    /// `regret <= bound (+ slack)`; `true` when no bound applies.
    pub pass: bool,
}

/// Cumulative regret of a trace against a fixed comparator `u`:
/// `sum_t <g_t, w_t - u>`.
pub fn regret_against(trace: &[TraceRow], u: &[f64]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::Domain("regret_against requires a non-empty trace".into()));
    }
    let mut total = 0.0;
    for row in trace {
        if row.g.len() != u.len() || row.w.len() != u.len() {
            return Err(Error::Shape { expected: u.len(), got: row.g.len() });
        }
        for i in 0..u.len() {
            total += row.g[i] * (row.w[i] - u[i]);
        }
    }
    Ok(total)
}

/// Checks the structural invariants of a trace: round indices increase by
/// one, hints never decrease, and every cumulative column equals a fresh
/// prefix-sum recomputation (tolerance `1e-12` relative).
pub fn validate_trace(trace: &[TraceRow]) -> Result<()> {
    let mut sum_g2 = 0.0;
    let mut sum_a = 0.0;
    let mut regret_u0 = 0.0;
    let mut prev_h = 0.0;
    let mut prev_ratio = 0.0;
    for (i, row) in trace.iter().enumerate() {
        if row.t != (i as u64) + 1 {
            return Err(Error::Domain(format!(
                "trace round {} has index {}, expected {}",
                i, row.t, i + 1
            )));
        }
        if row.h < prev_h {
            return Err(Error::InvalidHint(format!(
                "hint decreased from {prev_h} to {} at round {}",
                row.h, row.t
            )));
        }
        prev_h = row.h;
        if row.clip_ratio_sum + 1e-12 < prev_ratio {
            return Err(Error::Domain(format!(
                "clip_ratio_sum decreased at round {}",
                row.t
            )));
        }
        prev_ratio = row.clip_ratio_sum;
        sum_g2 += row.g.iter().map(|g| g * g).sum::<f64>();
        sum_a += row.a;
        regret_u0 += row.g.iter().zip(&row.w).map(|(g, w)| g * w).sum::<f64>();
        let checks = [
            ("sum_g2", row.sum_g2, sum_g2),
            ("sum_a", row.sum_a, sum_a),
            ("regret_u0", row.regret_u0, regret_u0),
        ];
        for (name, stored, fresh) in checks {
            if (stored - fresh).abs() > 1e-12 * (1.0 + fresh.abs()) {
                return Err(Error::Domain(format!(
                    "cumulative column {name} disagrees with recomputation at round {}: {stored} vs {fresh}",
                    row.t
                )));
            }
        }
    }
    Ok(())
}

/// Prints a float with 17 significant digits (lossless f64 round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad float {p:?} in trace: {e}")))
        })
        .collect()
}

pub const TRACE_HEADER: [&str; 9] =
    ["t", "h", "g", "w", "a", "sum_g2", "sum_a", "clip_ratio_sum", "regret_u0"];

/// Serializes rows to CSV at `path`. The output is deterministic: equal
/// rows produce byte-identical files.
pub fn write_trace(rows: &[TraceRow], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    write_trace_to(rows, &mut wtr)
}

/// Serializes rows through any `csv::Writer` (used for in-memory byte
/// comparisons in determinism checks).
pub fn write_trace_to<W: std::io::Write>(rows: &[TraceRow], wtr: &mut csv::Writer<W>) -> Result<()> {
    let io_err = |e: csv::Error| Error::Config(format!("trace write failed: {e}"));
    wtr.write_record(TRACE_HEADER).map_err(io_err)?;
    for row in rows {
        wtr.write_record(&[
            row.t.to_string(),
            fmt_f64(row.h),
            fmt_vec(&row.g),
            fmt_vec(&row.w),
            fmt_f64(row.a),
            fmt_f64(row.sum_g2),
            fmt_f64(row.sum_a),
            fmt_f64(row.clip_ratio_sum),
            fmt_f64(row.regret_u0),
        ])
        .map_err(io_err)?;
    }
    wtr.flush().map_err(|e| Error::Config(format!("trace write failed: {e}")))?;
    Ok(())
}

/// Parses a CSV trace previously produced by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::Config(format!("trace read failed: {e}"));
    let headers = rdr.headers().map_err(io_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(Error::Config(format!("unexpected trace header: {headers:?}")));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(io_err)?;
        if record.len() != TRACE_HEADER.len() {
            return Err(Error::Config(format!("bad trace row: {record:?}")));
        }
        let f = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad float {:?} in trace: {e}", &record[i])))
        };
        rows.push(TraceRow {
            t: record[0]
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("bad round index {:?}: {e}", &record[0])))?,
            h: f(1)?,
            g: parse_vec(&record[2])?,
            w: parse_vec(&record[3])?,
            a: f(4)?,
            sum_g2: f(5)?,
            sum_a: f(6)?,
            clip_ratio_sum: f(7)?,
            regret_u0: f(8)?,
        });
    }
    Ok(rows)
}

/// The default comparator grid for 1-D reports: `{0, ±0.1, ±1, ±10, ±100}`
/// scaled by `h1`.
pub fn comparator_grid(h1: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    for m in [0.1, 1.0, 10.0, 100.0] {
        grid.push(m * h1);
        grid.push(-m * h1);
    }
    grid
}
