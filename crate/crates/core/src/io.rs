//! File formats: raw little-endian `f64` fields with a JSON sidecar, plus
//! small helpers for JSON, CSV and point lists.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SpaceTimeField;
use crate::spectral::GridSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: GridSpec,
    pub t_end: f64,
    pub steps: usize,
    /// Always `"f64-le-complex-interleaved"`.
    pub encoding: String,
}

const ENCODING: &str = "f64-le-complex-interleaved";

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut p = base.as_os_str().to_owned();
    p.push(ext);
    PathBuf::from(p)
}

/// Writes `<base>.bin` (time-major values, real and imaginary parts
/// interleaved) and `<base>.json`.
pub fn write_field(base: &Path, field: &SpaceTimeField) -> Result<()> {
    let mut bytes = Vec::with_capacity(field.values().len() * 16);
    for v in field.values() {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(with_ext(base, ".bin"), bytes)?;
    let header = FieldHeader { grid: *field.grid(), t_end: field.t_end(), steps: field.steps(), encoding: ENCODING.into() };
    write_json(&with_ext(base, ".json"), &header)
}

pub fn read_field(base: &Path) -> Result<SpaceTimeField> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(with_ext(base, ".json"))?)?;
    if header.encoding != ENCODING {
        return Err(Error::Format(format!("unknown encoding {}", header.encoding)));
    }
    let grid = GridSpec::new(header.grid.dim, header.grid.half_extent, header.grid.points)?;
    let bytes = fs::read(with_ext(base, ".bin"))?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Format("binary field length is not a multiple of 16".into()));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    SpaceTimeField::new(grid, header.t_end, header.steps, values)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Numeric rows separated by whitespace or commas; `#` starts a comment.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", n + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_rows(&fs::read_to_string(path)?)
}

/// Two-column plot data: `x y` per line.
pub fn plot_data(xs: &[f64], ys: &[f64]) -> String {
    xs.iter().zip(ys).map(|(x, y)| format!("{x:.12e} {y:.12e}\n")).collect()
}
