//! CSV and JSON serialisation of sweep results.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::reference::hex_digest;
use super::sweep::{SweepCell, SweepResult, SweepSpec};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "kind",
    "p",
    "epsilon",
    "beta",
    "axis",
    "axis_value",
    "sigma",
    "error_u",
    "error_v",
    "observed_order",
    "status",
    "wallclock_seconds",
];

/// One parsed CSV row; empty numeric fields read back as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub kind: String,
    pub p: u32,
    pub epsilon: f64,
    pub beta: f64,
    pub axis: String,
    pub axis_value: f64,
    pub sigma: f64,
    pub error_u: Option<f64>,
    pub error_v: Option<f64>,
    pub observed_order: Option<f64>,
    pub status: String,
    pub wallclock_seconds: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn cell_record(spec: &SweepSpec, cell: &SweepCell) -> [String; 12] {
    let r = cell.report.as_ref();
    [
        spec.base.kind.as_str().to_string(),
        spec.base.p.to_string(),
        format!("{:e}", cell.epsilon),
        format!("{:e}", spec.base.beta),
        spec.axis.as_str().to_string(),
        format!("{:e}", cell.axis_value),
        format!("{:e}", spec.sigma),
        opt(r.map(|r| r.error_u)),
        opt(r.map(|r| r.error_v)),
        opt(r.and_then(|r| r.observed_order)),
        cell.status.as_str().to_string(),
        opt(r.map(|r| r.wallclock_seconds)),
    ]
}

/// Writes one row per cell, epsilon-major. An empty sweep gives just the header.
pub fn write_csv<W: Write>(result: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    for cell in result.cells.iter().flatten() {
        w.write_record(cell_record(&result.spec, cell))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(result, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::param(
            "csv",
            format!("unexpected header {headers:?}"),
        ));
    }
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
    pub reference_n: usize,
    pub reference_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub spec: SweepSpec,
    pub spec_hash: String,
    pub grids: Vec<GridInfo>,
    pub cells: Vec<SweepCell>,
    pub e_inf: Vec<Option<f64>>,
    pub version: String,
}

pub fn version() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// sha256 of the canonical JSON form of the sweep definition.
pub fn spec_hash(spec: &SweepSpec) -> Result<String> {
    Ok(hex_digest(&serde_json::to_vec(spec)?))
}

pub fn document(result: &SweepResult) -> Result<SweepDocument> {
    let spec = &result.spec;
    let mut grids = Vec::with_capacity(spec.epsilons.len());
    for (i, &eps) in spec.epsilons.iter().enumerate() {
        let problem = spec.problem(eps);
        let (a, b) = problem.interval();
        // coarse mesh for spatial sweeps is per column; report the reference one
        let reference_n = problem.grid_with_spacing(spec.reference.h)?.len();
        let h = (b - a) / reference_n as f64;
        grids.push(GridInfo {
            epsilon: eps,
            a,
            b,
            n: reference_n,
            h,
            reference_n,
            reference_key: result.reference_keys.get(i).cloned().flatten(),
        });
    }
    Ok(SweepDocument {
        spec: spec.clone(),
        spec_hash: spec_hash(spec)?,
        grids,
        cells: result.cells.iter().flatten().cloned().collect(),
        e_inf: result.e_inf.clone(),
        version: version(),
    })
}

pub fn write_json<W: Write>(result: &SweepResult, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &document(result)?)?;
    Ok(())
}

pub fn write_json_file(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_json(result, std::io::BufWriter::new(file))
}
