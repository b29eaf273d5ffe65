// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use noon_core::units::{angular_to_mhz, seconds_to_ns};
use noon_core::{run_protocol, selfcheck, sweep, CrosstalkMode, PulseModel, RunResult};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::output::{
    load_progress, progress_path, schedule_table, sweep_csv, CsvOptions, ProgressHeader,
    ProgressRecord,
};

/// Where a configuration comes from plus command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub mode: Option<CrosstalkMode>,
    pub pulses: Option<PulseModel>,
}

impl Source {
    pub fn resolve(&self) -> Result<ConfigFile> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => ConfigFile::load(path)?,
            (None, Some(name)) => ConfigFile::from_preset(name)?,
            (Some(_), Some(_)) => bail!("give either --config or --preset, not both"),
            (None, None) => bail!("no configuration given (use --config PATH or --preset NAME)"),
        };
        if let Some(m) = self.mode {
            cfg.crosstalk = Some(m);
        }
        if let Some(p) = self.pulses {
            cfg.pulses = Some(p);
        }
        Ok(cfg)
    }
}

fn flag<T: Serialize>(v: Option<T>) -> String {
    v.and_then(|x| serde_json::to_value(x).ok())
        .and_then(|j| j.as_str().map(String::from))
        .unwrap_or_else(|| "-".into())
}

fn mode_flags(cfg: &ConfigFile) -> String {
    format!(
        "crosstalk={} pulses={} schedule={}",
        flag(cfg.crosstalk),
        flag(cfg.pulses),
        flag(cfg.schedule)
    )
}

#[derive(Debug, Serialize)]
struct CheckpointRecord {
    label: String,
    kind: &'static str,
    t_end_ns: f64,
    fidelity: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunRecord {
    engine: String,
    config_sha256: String,
    n: usize,
    omega_mhz: f64,
    g_mhz: f64,
    nmax: (usize, usize),
    fidelity: f64,
    total_time_ns: f64,
    max_trace_drift: f64,
    diagnostics: noon_core::Diagnostics,
    warnings: Vec<String>,
    checkpoints: Vec<CheckpointRecord>,
    wall_ms: f64,
}

fn run_record(cfg: &ConfigFile, r: &RunResult, n: usize, omega: f64, g: f64) -> RunRecord {
    RunRecord {
        engine: format!("noon-sim {}", noon_core::VERSION),
        config_sha256: cfg.digest(),
        n,
        omega_mhz: angular_to_mhz(omega),
        g_mhz: angular_to_mhz(g),
        nmax: r.nmax,
        fidelity: r.fidelity,
        total_time_ns: seconds_to_ns(r.schedule.total_time),
        max_trace_drift: r.max_trace_drift,
        diagnostics: r.diagnostics,
        warnings: r.warnings.clone(),
        checkpoints: r
            .checkpoints
            .iter()
            .map(|c| CheckpointRecord {
                label: c.label.clone(),
                kind: c.kind.name(),
                t_end_ns: seconds_to_ns(c.t_end),
                fidelity: c.fidelity(),
            })
            .collect(),
        wall_ms: r.wall_time.as_secs_f64() * 1e3,
    }
}

/// Runs one protocol, prints a summary line and optionally writes a JSON
/// record.
pub fn cmd_run(source: &Source, out: Option<&Path>) -> Result<()> {
    let file = source.resolve()?;
    let cfg = file.run_config()?;
    let result = run_protocol(&cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let record = run_record(&file, &result, cfg.n, cfg.params.omega_rabi, cfg.params.g);
    println!(
        "N={} omega={} MHz g={} MHz F={:.6} segments={} total={:.2} ns trace_drift={:.2e} min_eig={:.2e} edge_pop={:.2e} wall={:.0} ms",
        record.n,
        record.omega_mhz,
        record.g_mhz,
        record.fidelity,
        record.checkpoints.len(),
        record.total_time_ns,
        record.diagnostics.trace_drift,
        record.diagnostics.min_eigenvalue,
        record.diagnostics.edge_population,
        record.wall_ms
    );
    if let Some(path) = out.map(Path::to_path_buf).or(file.out.clone()) {
        let json = serde_json::to_string_pretty(&record)?;
        fs::write(&path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub struct SweepOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub timings: bool,
}

/// Outcome of a sweep for the caller's exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub rows: usize,
    pub computed: usize,
    pub failed: usize,
}

pub fn cmd_sweep(source: &Source, opts: &SweepOptions) -> Result<SweepSummary> {
    let file = source.resolve()?;
    let spec = file.sweep_spec()?;
    let Some(out) = opts.out.clone().or(file.out.clone()) else {
        bail!("no output path (use --out or the `out` key)");
    };
    let digest = file.digest();
    let sidecar = progress_path(&out);
    let recorded = load_progress(&sidecar, &digest)?;
    let fresh_start = recorded.is_empty();
    // failed points are retried
    let done: Vec<_> = recorded.into_iter().filter(|r| r.error.is_none()).collect();
    let points = spec.points();
    let pending = points
        .iter()
        .filter(|p| !done.iter().any(|r| &r.axis_values == *p))
        .count();

    let mut writer = if fresh_start {
        let mut f = File::create(&sidecar)
            .with_context(|| format!("cannot create {}", sidecar.display()))?;
        writeln!(
            f,
            "{}",
            serde_json::to_string(&ProgressHeader {
                config_sha256: digest.clone()
            })?
        )?;
        f
    } else {
        eprintln!(
            "resuming: {} of {} points already done",
            points.len() - pending,
            points.len()
        );
        OpenOptions::new().append(true).open(&sidecar)?
    };
    writer.flush()?;
    let writer = Mutex::new(writer);

    let workers = opts
        .workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("cannot start worker pool")?;
    let result = pool.install(|| {
        sweep(&spec, &done, |row| {
            let line = serde_json::to_string(&ProgressRecord::from(row)).expect("row serializes");
            let mut w = writer.lock().expect("progress writer");
            // A lost progress line only costs recomputation on resume.
            let _ = writeln!(w, "{line}").and_then(|_| w.flush());
            let status = match &row.error {
                Some(e) => format!("failed: {e}"),
                None => format!("F={:.6}", row.fidelity),
            };
            eprintln!(
                "point {:?}: {status} ({:.0} ms)",
                row.axis_values, row.wall_ms
            );
        })
    })?;

    let csv = sweep_csv(
        &result,
        &CsvOptions {
            digest: &digest,
            flags: &mode_flags(&file),
            timings: opts.timings,
        },
    );
    let tmp = out.with_extension("csv.tmp");
    fs::write(&tmp, csv).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, &out).with_context(|| format!("cannot write {}", out.display()))?;

    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    Ok(SweepSummary {
        rows: result.rows.len(),
        computed: pending,
        failed,
    })
}

pub fn cmd_schedule(source: &Source) -> Result<String> {
    let cfg = source.resolve()?.run_config()?;
    let schedule = cfg.build_schedule()?;
    Ok(schedule_table(&schedule))
}

/// Runs the oracle suite; returns the report and whether every check passed.
pub fn cmd_verify() -> (String, bool) {
    let mut report = String::new();
    let mut all = true;
    for c in selfcheck::run_all() {
        all &= c.passed;
        report.push_str(&format!(
            "{}  {:<26} {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    (report, all)
}
