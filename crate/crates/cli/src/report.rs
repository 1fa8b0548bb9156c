//! Machine-readable run reports.
//!
//! JSON holds everything: configuration echo, timing, solver trace and
//! metrics. CSV holds one row per frame plus a final `aggregate` row with
//! the columns listed in [`CSV_HEADER`]. Both carry `schema_version`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use bgsub_core::{IterationRecord, MetricsReport, Termination};
use serde::{Deserialize, Serialize};

use crate::config::ReportFormat;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 13] = [
    "schema_version",
    "solver",
    "frame",
    "f_measure",
    "psnr_db",
    "ssim",
    "d_score",
    "tp",
    "fp",
    "tn",
    "fn",
    "iterations",
    "median_seconds",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub repeat: usize,
    /// Wall time of each solve, excluding I/O and mask extraction.
    pub seconds: Vec<f64>,
    pub median_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub config: BTreeMap<String, String>,
    pub solver: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub timing: Timing,
    pub iterations: usize,
    pub termination: Termination,
    /// `false` when the run hit its iteration cap well short of tolerance.
    pub converged: bool,
    pub final_rank: usize,
    pub final_objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_bound_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub warnings: Vec<String>,
    pub trace: Vec<IterationRecord>,
}

impl BenchReport {
    /// Copy with every wall-clock field zeroed; equal inputs give equal
    /// results.
    pub fn without_timing(&self) -> BenchReport {
        let mut r = self.clone();
        r.timing.seconds.iter_mut().for_each(|s| *s = 0.0);
        r.timing.median_seconds = 0.0;
        r.trace.iter_mut().for_each(|t| t.elapsed = 0.0);
        r
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(crate::config::ConfigError::Invalid(e.to_string())))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let run = (self.iterations, self.timing.median_seconds);
        write_metrics_csv(out, &self.solver, self.metrics.as_ref(), Some(run))
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, CliError> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }

    pub fn emit(&self, path: &Path, format: ReportFormat) -> Result<(), CliError> {
        std::fs::write(path, self.render(format)?).map_err(|e| CliError::io(path, e))
    }
}

/// Per-frame rows, then the aggregate row. `run` fills the iteration and
/// timing columns of the aggregate row.
fn write_metrics_csv<W: Write>(
    out: W,
    solver: &str,
    metrics: Option<&MetricsReport>,
    run: Option<(usize, f64)>,
) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Internal(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let version = SCHEMA_VERSION.to_string();
    if let Some(m) = metrics {
        for (k, f) in m.per_frame.iter().enumerate() {
            let c = &f.confusion;
            w.write_record([
                version.as_str(),
                solver,
                &k.to_string(),
                &f.f_measure.to_string(),
                &f.psnr_db.to_string(),
                &f.ssim.to_string(),
                &f.d_score.to_string(),
                &c.tp.to_string(),
                &c.fp.to_string(),
                &c.tn.to_string(),
                &c.fn_.to_string(),
                "",
                "",
            ])
            .map_err(csv_err)?;
        }
    }
    let metric = |f: fn(&MetricsReport) -> f64| metrics.map(|m| f(m).to_string()).unwrap_or_default();
    let (iterations, median) = run.map_or((String::new(), String::new()), |(i, t)| (i.to_string(), t.to_string()));
    w.write_record([
        version.as_str(),
        solver,
        "aggregate",
        &metric(|m| m.f_measure),
        &metric(|m| m.psnr_db),
        &metric(|m| m.ssim),
        &metric(|m| m.d_score),
        "",
        "",
        "",
        "",
        &iterations,
        &median,
    ])
    .map_err(csv_err)?;
    w.flush().map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(())
}

/// Standalone metrics for `bgsub eval`.
pub fn metrics_csv(metrics: &MetricsReport) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, "", Some(metrics), None)?;
    String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    schema_version: u32,
    metrics: &'a MetricsReport,
}

pub fn metrics_json(metrics: &MetricsReport) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&MetricsJson {
        schema_version: SCHEMA_VERSION,
        metrics,
    })
    .map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
