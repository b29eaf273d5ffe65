// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Text formats: the sweep CSV, its progress sidecar and the schedule table.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use noon_core::units::seconds_to_ns;
use noon_core::{Diagnostics, ProtocolSchedule, SweepResult, SweepRow};
use serde::{Deserialize, Serialize};

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One line of the progress sidecar. Failed points store `fidelity: null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub axis_values: Vec<f64>,
    pub fidelity: Option<f64>,
    pub g_best_mhz: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl From<&SweepRow> for ProgressRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            axis_values: r.axis_values.clone(),
            fidelity: r.fidelity.is_finite().then_some(r.fidelity),
            g_best_mhz: r.g_best_mhz,
            diagnostics: r.diagnostics,
            wall_ms: r.wall_ms,
            error: r.error.clone(),
        }
    }
}

impl From<ProgressRecord> for SweepRow {
    fn from(r: ProgressRecord) -> Self {
        Self {
            axis_values: r.axis_values,
            fidelity: r.fidelity.unwrap_or(f64::NAN),
            g_best_mhz: r.g_best_mhz,
            diagnostics: r.diagnostics,
            wall_ms: r.wall_ms,
            error: r.error,
        }
    }
}

/// First line of the sidecar; rows are only reused under the same digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressHeader {
    pub config_sha256: String,
}

pub fn progress_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".progress");
    PathBuf::from(s)
}

/// Rows finished by an earlier invocation with the same config digest.
/// A missing sidecar, another digest or a torn last line yield fewer rows.
pub fn load_progress(path: &Path, digest: &str) -> Result<Vec<SweepRow>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e).with_context(|| format!("cannot read {}", path.display())),
    };
    let mut lines = BufReader::new(file).lines();
    let header: Option<ProgressHeader> = match lines.next() {
        Some(line) => serde_json::from_str(&line?).ok(),
        None => None,
    };
    if header.map(|h| h.config_sha256) != Some(digest.to_string()) {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for line in lines {
        match serde_json::from_str::<ProgressRecord>(&line?) {
            Ok(r) => rows.push(r.into()),
            Err(_) => break,
        }
    }
    Ok(rows)
}

pub struct CsvOptions<'a> {
    pub digest: &'a str,
    pub flags: &'a str,
    pub timings: bool,
}

pub fn sweep_csv(result: &SweepResult, opts: &CsvOptions) -> String {
    let optimized = result.rows.iter().any(|r| r.g_best_mhz.is_some());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# noon-sim {} config_sha256={} {}",
        noon_core::VERSION,
        opts.digest,
        opts.flags
    );
    let mut header: Vec<&str> = result.axis_names.iter().map(String::as_str).collect();
    header.push("fidelity");
    if optimized {
        header.push("g_best_mhz");
    }
    header.extend(["trace_drift", "min_eig", "edge_pop"]);
    if opts.timings {
        header.push("wall_ms");
    }
    out.push_str(&header.join(","));
    out.push('\n');

    for row in &result.rows {
        let mut cells: Vec<String> = row.axis_values.iter().map(|&v| fmt_sig(v)).collect();
        cells.push(fmt_sig(row.fidelity));
        if optimized {
            cells.push(row.g_best_mhz.map_or_else(|| "nan".into(), fmt_sig));
        }
        match &row.diagnostics {
            Some(d) => {
                cells.extend([d.trace_drift, d.min_eigenvalue, d.edge_population].map(fmt_sig))
            }
            None => cells.extend(["nan", "nan", "nan"].map(String::from)),
        }
        if opts.timings {
            cells.push(format!("{:.0}", row.wall_ms));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn schedule_table(s: &ProtocolSchedule) -> String {
    let label_w = s
        .segments
        .iter()
        .map(|x| x.label.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let kind_w = s
        .segments
        .iter()
        .map(|x| x.kind.name().len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3}  {:<label_w$}  {:<kind_w$}  {:>12}  {:>12}",
        "#", "label", "kind", "start_ns", "duration_ns"
    );
    for (i, seg) in s.segments.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>3}  {:<label_w$}  {:<kind_w$}  {:>12.4}  {:>12.4}",
            i + 1,
            seg.label,
            seg.kind.name(),
            seconds_to_ns(seg.t_start),
            seconds_to_ns(seg.duration)
        );
    }
    let _ = writeln!(
        out,
        "total {:.4} ns over {} segments",
        seconds_to_ns(s.total_time),
        s.segments.len()
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(300.0), "300");
        assert_eq!(fmt_sig(0.935123456789), "0.935123457");
        assert_eq!(fmt_sig(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_sig(1.25e-5), "1.25e-05");
        assert_eq!(fmt_sig(1.0e-4), "0.0001");
        assert_eq!(fmt_sig(123456789.0), "123456789");
        assert_eq!(fmt_sig(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn progress_round_trip() {
        let row = SweepRow {
            axis_values: vec![1.0, 0.1 + 0.2],
            fidelity: f64::NAN,
            g_best_mhz: None,
            diagnostics: None,
            wall_ms: 3.5,
            error: Some("boom".into()),
        };
        let json = serde_json::to_string(&ProgressRecord::from(&row)).unwrap();
        let back: SweepRow = serde_json::from_str::<ProgressRecord>(&json)
            .unwrap()
            .into();
        assert_eq!(back.axis_values, row.axis_values);
        assert!(back.fidelity.is_nan());
        assert_eq!(back.error, row.error);
    }

    #[test]
    fn progress_path_appends_suffix() {
        assert_eq!(
            progress_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.progress")
        );
    }
}
