use crate::error::{Error, Result};
use crate::par;

use super::{CellField, Domain, FiltrationLevel, PartitionFiltration};

fn integer_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let k = r.round();
    (k >= 1.0 && (r - k).abs() <= 1e-9 * k).then_some(k as usize)
}

fn aligned(origin: f64, len: f64) -> bool {
    let r = origin / len;
    (r - r.round()).abs() <= 1e-9 * (1.0 + r.abs())
}

/// How a level's cells sit on the field's grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Fit {
    /// Each level cell meets the same atoms as a `(time, space)` block of atoms.
    Blocks(usize, usize),
    /// Cells are larger than the grid.
    Coarser,
}

fn axis_block(cell: f64, step: f64, count: usize, origin: f64) -> Result<Option<usize>> {
    if cell > count as f64 * step * (1.0 + 1e-12) {
        return Ok(None);
    }
    if !aligned(origin, cell) {
        return Err(Error::Coverage(format!("cells of length {cell} are not aligned with the grid origin {origin}")));
    }
    if let Some(k) = integer_ratio(cell, step) {
        if count % k == 0 {
            return Ok(Some(k));
        }
        return Err(Error::Coverage(format!("grid of {count} cells is not a union of blocks of {k}")));
    }
    if integer_ratio(step, cell).is_some() {
        return Ok(Some(1));
    }
    Err(Error::Coverage(format!("cell length {cell} and grid step {step} are incommensurate")))
}

pub(crate) fn fit(field: &CellField, lv: &FiltrationLevel) -> Result<Fit> {
    let bt = axis_block(lv.time_length, field.dt, field.nt, field.t0)?;
    let mut bs: Option<Option<usize>> = None;
    for &x in &field.x0 {
        let b = axis_block(lv.side, field.h, field.ns, x)?;
        if bs.is_some_and(|prev| prev != b) {
            return Err(Error::Coverage("inconsistent spatial alignment".into()));
        }
        bs = Some(b);
    }
    match (bt, bs.flatten()) {
        (Some(t), Some(s)) => Ok(Fit::Blocks(t, s)),
        _ => Ok(Fit::Coarser),
    }
}

fn check_support(field: &CellField, filt: &PartitionFiltration) -> Result<()> {
    if field.dim != filt.dim {
        return Err(Error::Configuration(format!("field dimension {} but filtration dimension {}", field.dim, filt.dim)));
    }
    if field.t0 < 0.0 {
        return Err(Error::Coverage(format!("field starts at t = {} < 0", field.t0)));
    }
    if filt.domain == Domain::Half && field.x0[0] < 0.0 {
        return Err(Error::Coverage("field extends outside the half space".into()));
    }
    Ok(())
}

/// Filtration levels whose cells tile the field's grid.
pub fn sharp_levels(field: &CellField, filt: &PartitionFiltration) -> Result<Vec<i32>> {
    check_support(field, filt)?;
    let mut out = Vec::new();
    for lv in &filt.levels {
        if let Fit::Blocks(..) = fit(field, lv)? {
            out.push(lv.n);
        }
    }
    Ok(out)
}

/// Per-atom mean oscillation over the containing `(bt, bs)` block.
pub(crate) fn block_oscillation(field: &CellField, bt: usize, bs: usize) -> Vec<f64> {
    if bt == 1 && bs == 1 {
        return vec![0.0; field.len()];
    }
    let d = field.dim;
    let nbs = field.ns / bs;
    let blocks = (field.nt / bt) * nbs.pow(d as u32);
    let block_of = |k: usize| {
        let (j, idx) = field.unflatten(k);
        idx.iter().fold(j / bt, |acc, &i| acc * nbs + i / bs)
    };
    let owner: Vec<usize> = (0..field.len()).map(block_of).collect();
    let count = (bt * bs.pow(d as u32)) as f64;
    let v = field.values();
    let mut mean = vec![0.0; blocks];
    for (k, &b) in owner.iter().enumerate() {
        mean[b] += v[k];
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut osc = vec![0.0; blocks];
    for (k, &b) in owner.iter().enumerate() {
        osc[b] += (v[k] - mean[b]).abs();
    }
    owner.iter().map(|&b| osc[b] / count).collect()
}

/// Dyadic sharp function: the largest mean oscillation over the level cells
/// containing each grid cell, over every level that tiles the grid.
pub fn sharp_function(field: &CellField, filt: &PartitionFiltration) -> Result<CellField> {
    check_support(field, filt)?;
    let mut fits = Vec::new();
    for lv in &filt.levels {
        if let Fit::Blocks(bt, bs) = fit(field, lv)? {
            fits.push((bt, bs));
        }
    }
    if fits.is_empty() {
        return Err(Error::Coverage("no filtration level tiles the field".into()));
    }
    let per_level = par::map_range(fits.len(), |i| block_oscillation(field, fits[i].0, fits[i].1));
    let mut out = vec![0.0f64; field.len()];
    for lvl in &per_level {
        for (o, &v) in out.iter_mut().zip(lvl) {
            *o = o.max(v);
        }
    }
    field.with_values(out)
}
