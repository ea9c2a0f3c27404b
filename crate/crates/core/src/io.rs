//! Curve, field, grid and report files.
//!
//! Curves: JSON `{"dimension": n, "points": [[x, ...], ...], "closed": true}`
//! or CSV with one point per row. Fields use the same layouts with
//! `"values"` in place of `"points"` and are sampled on the curve's
//! arclength grid.

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::flow::FlowState;
use crate::quadrature::PairGrid;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFile {
    pub dimension: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_closed")]
    pub closed: bool,
}

fn default_closed() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldFile {
    pub dimension: usize,
    pub values: Vec<Vec<f64>>,
}

fn with_path(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<std::io::BufReader<File>> {
    Ok(std::io::BufReader::new(File::open(path).map_err(with_path(path))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(with_path(path))?))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(open(path)?);
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match row {
            Ok(r) => rows.push(r),
            // a header line is allowed first
            Err(_) if n == 0 => {}
            Err(e) => return Err(Error::Parse(format!("{}: row {}: {e}", path.display(), n + 1))),
        }
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn check_rows(rows: &[Vec<f64>], dimension: usize, what: &str) -> Result<()> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dimension) {
        return Err(Error::Parse(format!("{what} row {i} has {} entries, expected {dimension}", r.len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("{what} contains non-finite values")));
    }
    Ok(())
}

/// Reads a curve file without resampling.
pub fn read_curve_file(path: impl AsRef<Path>) -> Result<CurveFile> {
    let path = path.as_ref();
    let file = if is_csv(path) {
        let points = read_csv_rows(path)?;
        let dimension = points.first().map_or(0, Vec::len);
        CurveFile { dimension, points, closed: true }
    } else {
        serde_json::from_reader(open(path)?)?
    };
    check_rows(&file.points, file.dimension, "curve")?;
    Ok(file)
}

/// Reads and resamples a curve; `m` overrides the sample count.
pub fn load_curve(path: impl AsRef<Path>, m: Option<usize>) -> Result<ClosedCurve> {
    let file = read_curve_file(path)?;
    match m {
        Some(m) => ClosedCurve::from_samples_with_resolution(&file.points, file.closed, m),
        None => ClosedCurve::from_samples(&file.points, file.closed),
    }
}

pub fn write_curve(curve: &ClosedCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rows = curve.positions().rows();
    if is_csv(path) {
        write_csv_rows(path, &rows)
    } else {
        let file = CurveFile { dimension: curve.dim(), points: rows, closed: true };
        write_json(path, &file)
    }
}

pub fn read_field(path: impl AsRef<Path>, curve: &ClosedCurve) -> Result<Field> {
    let path = path.as_ref();
    let file = if is_csv(path) {
        let values = read_csv_rows(path)?;
        let dimension = values.first().map_or(0, Vec::len);
        FieldFile { dimension, values }
    } else {
        serde_json::from_reader(open(path)?)?
    };
    check_rows(&file.values, file.dimension, "field")?;
    let field = Field::from_rows(&file.values)?;
    curve.check_field(&field)?;
    Ok(field)
}

pub fn write_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_csv_rows(path, &field.rows())
    } else {
        write_json(path, &FieldFile { dimension: field.dim(), values: field.rows() })
    }
}

fn write_csv_rows(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:.17e}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = create(path.as_ref())?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Grid as CSV: a `#` header line with the metadata, then `M` rows of `M`
/// values; band cells are written as `nan`.
pub fn write_grid_csv(grid: &PairGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    writeln!(
        w,
        "# M={},L={:.17e},label={},alpha={},p={},beta={},band={}",
        grid.m,
        grid.length,
        grid.label,
        grid.params.alpha(),
        grid.params.p(),
        grid.beta.map_or("none".to_string(), |b| b.to_string()),
        grid.band
    )?;
    for row in grid.values.chunks(grid.m) {
        let line: Vec<String> =
            row.iter().map(|v| if v.is_nan() { "nan".into() } else { format!("{v:.17e}") }).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Flow trace as CSV with columns `step, energy, grad_norm, dt`.
pub fn write_flow_trace(state: &FlowState, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["step", "energy", "grad_norm", "dt"]).map_err(csv_err)?;
    for (k, e) in state.energies.iter().enumerate() {
        let (g, dt) = if k == 0 { (f64::NAN, 0.0) } else { (state.grad_norms[k - 1], state.dts[k - 1]) };
        w.write_record([k.to_string(), format!("{e:.17e}"), format!("{g:.6e}"), format!("{dt:.6e}")])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
