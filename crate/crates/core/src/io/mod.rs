//! File formats and scenario orchestration.
//!
//! Pseudo-distributions are stored as JSON (complex entries as `{re, im}` objects,
//! row-major) and as CSV. Floats are written in shortest round-trip form, so
//! re-reading an artifact reproduces every bit. The column layouts are documented
//! in `schema/formats.md` at the repository root.

mod run;
mod scenario;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::{Conditioning, OrderingTag, PseudoDistribution};
use crate::error::{Error, Result};
use crate::tensor::ComplexTensor;

pub use run::{run, Mode, RunOptions, RunSummary};
pub use scenario::{
    load_scenario, parse_scenario, CcrScenario, CvConditionalScenario, CvJointScenario, CvStateSpec,
    DiscreteConditionalScenario, DiscreteJointScenario, DiscreteNpointScenario, ExperimentScenario, GridSpec,
    LoadedState, ObservableDto, OrderDto, Scenario, StateSpec, CcrExperiment,
};

/// Format marker written into every distribution file.
pub const DISTRIBUTION_FORMAT: &str = "kirkwood/pseudo-distribution/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDto {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<Complex64> for ComplexDto {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexDto> for Complex64 {
    fn from(z: ComplexDto) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// On-disk form of a [`PseudoDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub format: String,
    pub shape: Vec<usize>,
    pub axes: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub ordering: OrderingTag,
    pub cell_measure: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<Conditioning>,
    pub values: Vec<ComplexDto>,
}

impl From<&PseudoDistribution> for DistributionFile {
    fn from(d: &PseudoDistribution) -> Self {
        Self {
            format: DISTRIBUTION_FORMAT.into(),
            shape: d.shape().to_vec(),
            axes: d.axes.clone(),
            coords: d.coords.clone(),
            ordering: d.ordering,
            cell_measure: d.cell_measure,
            conditioning: d.conditioning.clone(),
            values: d.values.data().iter().map(|&z| z.into()).collect(),
        }
    }
}

impl DistributionFile {
    pub fn into_distribution(self) -> Result<PseudoDistribution> {
        if self.format != DISTRIBUTION_FORMAT {
            return Err(schema("format", format!("expected `{DISTRIBUTION_FORMAT}`, found `{}`", self.format)));
        }
        let values = ComplexTensor::new(self.shape, self.values.into_iter().map(Into::into).collect())
            .map_err(|e| schema("values", e.to_string()))?;
        let mut d = PseudoDistribution::new(values, self.axes, self.coords, self.ordering)
            .map_err(|e| schema("coords", e.to_string()))?
            .with_cell_measure(self.cell_measure);
        d.conditioning = self.conditioning;
        Ok(d)
    }
}

pub(crate) fn schema(field: &str, message: impl Into<String>) -> Error {
    Error::Schema { field: field.into(), message: message.into() }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

/// Reads JSON, reporting syntax errors with line and column and shape errors
/// with the path of the offending field.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_json(&text)
}

pub(crate) fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    // syntax first, so that position information is not lost to the typed pass
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let message = e.inner().to_string();
        let field = offending_field(e.path().to_string(), &message);
        Error::Schema { field, message }
    })
}

// Unknown and missing keys are reported by name; everything else by path.
fn offending_field(path: String, message: &str) -> String {
    let quoted = message.split('`').nth(1);
    let named = message.starts_with("unknown field") || message.starts_with("missing field");
    match (named, quoted) {
        (true, Some(name)) if path == "." => name.to_string(),
        (true, Some(name)) => format!("{path}.{name}"),
        _ => path,
    }
}

pub fn write_distribution_json(path: &Path, d: &PseudoDistribution) -> Result<()> {
    write_json(path, &DistributionFile::from(d))
}

pub fn read_distribution_json(path: &Path) -> Result<PseudoDistribution> {
    read_json::<DistributionFile>(path)?.into_distribution()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes a header and numeric rows.
pub fn write_table_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| io_err(path, e))?;
    }
    finish(path, w)
}

/// Header and numeric rows of a CSV file written by this module.
pub fn read_table_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 2,
                    column: 0,
                    message: format!("`{s}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// One row per entry: an index and a coordinate column per axis, then `re, im`.
pub fn write_distribution_csv(path: &Path, d: &PseudoDistribution) -> Result<()> {
    let mut header: Vec<String> = Vec::new();
    for a in &d.axes {
        header.push(format!("{a}_index"));
        header.push(a.clone());
    }
    header.extend(["re".into(), "im".into()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table_csv(path, &header, entries(d, true))
}

/// Plot-ready layout: coordinate columns, then `re, im`.
pub fn write_plot_csv(path: &Path, d: &PseudoDistribution) -> Result<()> {
    let mut header: Vec<&str> = d.axes.iter().map(String::as_str).collect();
    header.extend(["re", "im"]);
    write_table_csv(path, &header, entries(d, false))
}

fn entries(d: &PseudoDistribution, with_index: bool) -> impl Iterator<Item = Vec<f64>> + '_ {
    let mut idx = vec![0usize; d.values.rank()];
    d.values.data().iter().enumerate().map(move |(flat, z)| {
        d.values.unravel_into(flat, &mut idx);
        let mut row = Vec::with_capacity(2 * idx.len() + 2);
        for (axis, &i) in idx.iter().enumerate() {
            if with_index {
                row.push(i as f64);
            }
            row.push(d.coords[axis][i]);
        }
        row.extend([z.re, z.im]);
        row
    })
}

/// Result of diffing two distribution files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_abs_diff: f64,
    pub tol: f64,
    pub pass: bool,
    /// Entries exceeding `tol`, filled only on failure.
    pub failures: Vec<EntryDiff>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryDiff {
    pub index: Vec<usize>,
    pub left: ComplexDto,
    pub right: ComplexDto,
    pub abs_diff: f64,
}

/// Elementwise comparison of two distributions; shapes and ordering tags must agree.
pub fn compare_distributions(a: &PseudoDistribution, b: &PseudoDistribution, tol: f64) -> Result<CompareReport> {
    let max_abs_diff = a.max_abs_diff(b)?;
    let pass = max_abs_diff <= tol;
    let mut failures = Vec::new();
    if !pass {
        let mut idx = vec![0usize; a.values.rank()];
        for (flat, (x, y)) in a.values.data().iter().zip(b.values.data()).enumerate() {
            let diff = (x - y).norm();
            if !(diff <= tol) {
                a.values.unravel_into(flat, &mut idx);
                failures.push(EntryDiff { index: idx.clone(), left: (*x).into(), right: (*y).into(), abs_diff: diff });
            }
        }
    }
    Ok(CompareReport { max_abs_diff, tol, pass, failures })
}

/// [`compare_distributions`] on two distribution JSON files.
pub fn compare(path_a: &Path, path_b: &Path, tol: f64) -> Result<CompareReport> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {tol}")));
    }
    compare_distributions(&read_distribution_json(path_a)?, &read_distribution_json(path_b)?, tol)
}

/// Machine-readable description of a failure.
pub fn error_report(e: &Error) -> serde_json::Value {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() })
}
