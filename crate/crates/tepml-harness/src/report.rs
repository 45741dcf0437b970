//! Study results and their CSV / JSON serializations.

use crate::config::Config;
use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "sweep_axis",
    "sweep_value",
    "metric_name",
    "metric_value",
    "predicted_exponent",
    "fitted_slope",
    "n_unknowns",
    "solve_residual",
    "wall_ms",
];

pub const VERSION: &str = env!("TEPML_VERSION");

/// One measured metric at one sweep point. Studies without a linear solve
/// report zero unknowns and zero residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub metric_name: String,
    pub metric_value: f64,
    /// r₀·α₀·d, or zero where no rate is predicted.
    pub predicted_exponent: f64,
    /// Slope of the fit this metric took part in.
    pub fitted_slope: Option<f64>,
    pub n_unknowns: usize,
    pub solve_residual: f64,
    pub wall_ms: u64,
}

impl ErrorRecord {
    pub fn new(sweep_axis: &str, sweep_value: f64, metric_name: &str, metric_value: f64) -> Self {
        Self {
            sweep_axis: sweep_axis.to_string(),
            sweep_value,
            metric_name: metric_name.to_string(),
            metric_value,
            predicted_exponent: 0.0,
            fitted_slope: None,
            n_unknowns: 0,
            solve_residual: 0.0,
            wall_ms: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.sweep_value.is_finite()
            && self.metric_value.is_finite()
            && self.predicted_exponent.is_finite()
            && self.fitted_slope.is_none_or(f64::is_finite)
            && self.solve_residual.is_finite()
    }
}

/// A sweep point that produced no metrics, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub reason: String,
}

/// A pass/fail assertion made by a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, detail: detail.into() }
    }
}

/// Everything a study produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOutcome {
    pub records: Vec<ErrorRecord>,
    pub skipped: Vec<Skip>,
    pub checks: Vec<Check>,
}

impl StudyOutcome {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Records of one metric, in sweep order.
    pub fn metric(&self, name: &str) -> Vec<&ErrorRecord> {
        self.records.iter().filter(|r| r.metric_name == name).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub study: String,
    pub config: Config,
    pub records: Vec<ErrorRecord>,
    pub skipped: Vec<Skip>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(config: &Config, outcome: StudyOutcome) -> Self {
        Self {
            version: VERSION.to_string(),
            study: config.study.name().to_string(),
            config: config.clone(),
            records: outcome.records,
            skipped: outcome.skipped,
            checks: outcome.checks,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes the report; `path = None` writes to stdout.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<()> {
    if report.records.is_empty() {
        return Err(HarnessError::Precondition("no records to report".into()));
    }
    if let Some(bad) = report.records.iter().find(|r| !r.is_finite()) {
        return Err(HarnessError::Precondition(format!("non-finite record {bad:?}")));
    }
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(&report.records, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(records: &[ErrorRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
