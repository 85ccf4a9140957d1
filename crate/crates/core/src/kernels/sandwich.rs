use serde::{Deserialize, Serialize};

use super::scaling_factor;
use crate::error::Result;
use crate::symbols::BernsteinSpec;

/// A two-sided bound fitted on one grid and re-checked on an interleaved one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub fitted_n: f64,
    pub checked_points: usize,
    pub violations: usize,
    /// Largest constant needed on the check grid.
    pub check_n: f64,
}

const SLACK: f64 = 1.05;

fn geom(lo: f64, hi: f64, n: usize, offset: f64) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n).map(|i| lo * (r * (i as f64 + offset) / (n - 1) as f64).exp()).collect()
}

/// `N⁻¹t ≤ ψ⁻¹(ψ(t)) ≤ t` and `N⁻¹t ≤ ψ(ψ⁻¹(t)) ≤ Nt` with one constant.
pub fn inverse_sandwich(psi: &BernsteinSpec, lo: f64, hi: f64, n: usize) -> Result<SandwichReport> {
    let needed = |t: f64| -> Result<(f64, bool)> {
        let a = psi.inverse(psi.value(t)?)?;
        let b = psi.value(psi.inverse(t)?)?;
        let upper_ok = a <= t * (1.0 + 1e-9);
        let n = (t / a).max(b / t).max(t / b);
        Ok((n, upper_ok))
    };
    let mut fitted = 1.0f64;
    for t in geom(lo, hi, n, 0.0) {
        fitted = fitted.max(needed(t)?.0);
    }
    let mut violations = 0;
    let mut check_n = 1.0f64;
    let pts = geom(lo, hi, n, 0.5);
    for &t in &pts[..n - 1] {
        let (k, ok) = needed(t)?;
        check_n = check_n.max(k);
        if !ok || k > fitted * SLACK {
            violations += 1;
        }
    }
    Ok(SandwichReport { fitted_n: fitted, checked_points: n - 1, violations, check_n })
}

/// `N⁻¹|ξ|^{δ̃₁} ≤ tψ(|a_tξ|²) ≤ N|ξ|^{δ̃₂}` where the exponents swap at `|ξ| = 1`.
pub fn scaled_symbol_sandwich(
    psi: &BernsteinSpec,
    t_range: (f64, f64),
    xi_range: (f64, f64),
    n: usize,
) -> Result<SandwichReport> {
    let sc = psi.scaling();
    let (d4, d5) = (sc.lower, sc.upper);
    let needed = |t: f64, r: f64| -> Result<f64> {
        let a = scaling_factor(psi, t)?;
        let v = t * psi.value((a * r).powi(2))?;
        let (e1, e2) = if r >= 1.0 { (2.0 * d4, 2.0 * d5) } else { (2.0 * d5, 2.0 * d4) };
        Ok((r.powf(e1) / v).max(v / r.powf(e2)))
    };
    let mut fitted = 1.0f64;
    for t in geom(t_range.0, t_range.1, n, 0.0) {
        for r in geom(xi_range.0, xi_range.1, n, 0.0) {
            fitted = fitted.max(needed(t, r)?);
        }
    }
    let mut violations = 0;
    let mut check_n = 1.0f64;
    let ts = geom(t_range.0, t_range.1, n, 0.5);
    let rs = geom(xi_range.0, xi_range.1, n, 0.5);
    for &t in &ts[..n - 1] {
        for &r in &rs[..n - 1] {
            let k = needed(t, r)?;
            check_n = check_n.max(k);
            if k > fitted * SLACK {
                violations += 1;
            }
        }
    }
    Ok(SandwichReport { fitted_n: fitted, checked_points: (n - 1) * (n - 1), violations, check_n })
}
