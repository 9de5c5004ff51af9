//! CSV and JSON files.

use std::fs;
use std::path::Path;

use dmlab_core::{Complex64, ComplexField, Grid, Side};
use serde::Serialize;

use crate::error::CliError;

/// Writes `x,re,im` (or `xi,re,im`) with 17 significant digits.
pub fn write_field_csv(path: &Path, f: &ComplexField) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let axis = match f.side() {
        Side::Space => "x",
        Side::Frequency => "xi",
    };
    w.write_record([axis, "re", "im"])?;
    for (t, v) in f.nodes().iter().zip(f.values()) {
        w.write_record([format!("{t:.16e}"), format!("{:.16e}", v.re), format!("{:.16e}", v.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_field_csv`] back onto `grid`, checking
/// the node coordinates.
pub fn read_field_csv(path: &Path, grid: &Grid) -> Result<ComplexField, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let side = match r.headers()?.get(0) {
        Some("x") => Side::Space,
        Some("xi") => Side::Frequency,
        other => {
            return Err(CliError::Usage(format!(
                "{}: unexpected header {other:?}",
                path.display()
            )))
        }
    };
    let nodes = match side {
        Side::Space => grid.x_nodes(),
        Side::Frequency => grid.xi_nodes(),
    };
    let mut values = Vec::with_capacity(grid.n());
    for (j, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Usage(format!("{}: bad number in row {}", path.display(), j + 1)))
        };
        let t = num(0)?;
        if j >= nodes.len() || (t - nodes[j]).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(CliError::Usage(format!(
                "{}: row {} does not match the grid",
                path.display(),
                j + 1
            )));
        }
        values.push(Complex64::new(num(1)?, num(2)?));
    }
    ComplexField::new(grid, side, values).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// One CSV row per item, header from the field names.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
