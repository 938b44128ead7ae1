//! Table rows and their CSV / JSON encodings.
//!
//! Floats are written in shortest round-trip form, so parsing an emitted
//! file gives back bit-identical values. CSV uses LF line endings.

use std::io::Write;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{CliError, Estimand, RunConfig};
use crate::evidence::Method;
use crate::mc::{CellFailure, EvidenceCurve};

pub const CURVE_HEADER: &str = "delta,method,param,log_expected_evidence,std_error,reps,n,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub delta: f64,
    pub method: String,
    pub param: Option<f64>,
    pub log_expected_evidence: f64,
    pub std_error: f64,
    pub reps: u64,
    pub n: u64,
    pub seed: u64,
}

impl CurveRow {
    pub fn method(&self) -> Option<Method> {
        Method::from_parts(&self.method, self.param)
    }
}

/// Rows of `curve`, reporting the chosen estimand in the value columns.
pub fn curve_rows(curve: &EvidenceCurve, estimand: Estimand) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|p| {
            let (value, se) = match estimand {
                Estimand::LogOfMean => (p.log_expected_evidence, p.std_error),
                Estimand::MeanOfLog => (p.mean_log_evidence, p.mean_log_std_error),
            };
            CurveRow {
                delta: p.delta,
                method: p.method.label().to_string(),
                param: p.method.param(),
                log_expected_evidence: value,
                std_error: se,
                reps: p.reps,
                n: p.n,
                seed: p.seed,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyRow {
    pub method: String,
    pub param: Option<f64>,
    pub log_expected_evidence: f64,
    pub std_error: f64,
    /// `0 + 3·std_error`
    pub threshold: f64,
    pub verdict: String,
    pub expected_unsafe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialRow {
    pub batch: usize,
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub b: Option<f64>,
    pub t: Option<f64>,
    pub log_evidence: Option<f64>,
    pub full_data_log_evidence: Option<f64>,
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvalueRow {
    pub cap: f64,
    pub empirical_mean: f64,
    pub analytic: f64,
    pub std_error: f64,
    /// `(empirical − analytic) / std_error`
    pub z: f64,
    pub reps: u64,
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimand: Option<Estimand>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pub failures: &'a [CellFailure],
}

impl<'a, C: Serialize> Metadata<'a, C> {
    pub fn new(command: &'static str, config: &'a C) -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            estimand: None,
            failures: &[],
        }
    }
}

#[derive(Debug, Serialize)]
struct JsonDocument<'a, C: Serialize, R: Serialize, S: Serialize> {
    metadata: Metadata<'a, C>,
    rows: &'a [R],
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<S>,
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Numeric(format!("failed to write CSV: {e}"))
}

pub fn write_csv<R: Serialize>(rows: &[R], out: &mut dyn Write) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer
        .flush()
        .map_err(CliError::io("failed to write output"))?;
    Ok(())
}

/// Writes the header alone when there are no rows.
pub fn write_csv_with_header<R: Serialize>(
    rows: &[R],
    header: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if rows.is_empty() {
        writeln!(out, "{header}").map_err(CliError::io("failed to write output"))?;
        return Ok(());
    }
    write_csv(rows, out)
}

pub fn write_json<C: Serialize, R: Serialize, S: Serialize>(
    metadata: Metadata<'_, C>,
    rows: &[R],
    summary: Option<S>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let doc = JsonDocument {
        metadata,
        rows,
        summary,
    };
    serde_json::to_writer_pretty(&mut *out, &doc)
        .map_err(|e| CliError::Numeric(format!("failed to write JSON: {e}")))?;
    writeln!(out).map_err(CliError::io("failed to write output"))?;
    Ok(())
}

pub fn parse_csv<R: DeserializeOwned>(text: &str) -> Result<Vec<R>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

/// Parses the output of `curve --format csv`.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>, csv::Error> {
    parse_csv(text)
}

/// Resolved configuration as recorded in JSON metadata.
pub type CurveMetadata<'a> = Metadata<'a, RunConfig>;
