use serde::{Deserialize, Serialize};

use super::{compute_scaled_kernels, KernelSnapshot};
use crate::error::{Error, Result};
use crate::spectral::GridSpec;
use crate::symbols::{BernsteinSpec, SymbolSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundRow {
    pub s: f64,
    pub t: f64,
    pub kernel: String,
    pub sup: f64,
    pub weighted: f64,
    /// Weighted norm on the grid with `L` and `M` both doubled.
    pub weighted_doubled: f64,
    pub relative_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundsReport {
    pub delta: f64,
    pub rows: Vec<KernelBoundRow>,
    pub max_relative_change: f64,
    pub pass: bool,
    pub violations: Vec<String>,
}

const STABILITY: f64 = 0.2;

/// Sup norms and weighted `L₂` norms of `q₁, q₂ℓ, q₃`, with their stability
/// when the box and point count are doubled together.
pub fn verify_kernel_bounds(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    pairs: &[(f64, f64)],
    grid: &GridSpec,
    delta: f64,
) -> Result<KernelBoundsReport> {
    let d4 = psi.scaling().lower;
    let cap = d4.min(0.5);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, {cap})")));
    }
    let doubled = grid.enlarged(2);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &(s, t) in pairs {
        let base = compute_scaled_kernels(sym, psi, s, t, grid)?;
        let fine = compute_scaled_kernels(sym, psi, s, t, &doubled)?;
        for (a, b) in base.all().into_iter().zip(fine.all()) {
            rows.push(row(a, b, delta));
        }
    }
    let mut max_change = 0.0f64;
    for r in &rows {
        let finite = r.sup.is_finite() && r.weighted.is_finite() && r.weighted_doubled.is_finite();
        if !finite {
            violations.push(format!("{} at ({}, {}) is not finite", r.kernel, r.s, r.t));
        } else if r.relative_change > STABILITY {
            violations.push(format!(
                "{} at ({}, {}) changes by {:.1}% under doubling",
                r.kernel,
                r.s,
                r.t,
                100.0 * r.relative_change
            ));
        }
        max_change = max_change.max(r.relative_change);
    }
    Ok(KernelBoundsReport { delta, rows, max_relative_change: max_change, pass: violations.is_empty(), violations })
}

fn row(a: &KernelSnapshot, b: &KernelSnapshot, delta: f64) -> KernelBoundRow {
    let w1 = a.weighted_norm(delta);
    let w2 = b.weighted_norm(delta);
    let change = if w1 == 0.0 && w2 == 0.0 { 0.0 } else { (w2 - w1).abs() / w1.abs().max(w2.abs()) };
    KernelBoundRow {
        s: a.s,
        t: a.t,
        kernel: a.kind.label(),
        sup: a.max_abs(),
        weighted: w1,
        weighted_doubled: w2,
        relative_change: change,
    }
}
