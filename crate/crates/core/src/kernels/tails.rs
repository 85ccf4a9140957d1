use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{compute_kernel, multiplier, scaling_factor, synthesize_checked, KernelKind};
use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{FftEngine, GridSpec};
use crate::symbols::{BernsteinSpec, SymbolSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub s: f64,
    pub t: f64,
    /// Upper end of the `r`-range for the two difference estimates.
    pub a: f64,
    pub c_values: Vec<f64>,
    pub shift: Vec<f64>,
    /// Decay exponent; defaults to `0.45 min(δ₄, 1/2)`.
    pub delta: Option<f64>,
}

/// Left side, right-side shape without its constant, and the constant they imply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateTriple {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl EstimateTriple {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, ratio: lhs / rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub delta: f64,
    /// One entry per `c`: `∫ₛᵗ∫_{|z|≥c}|ψ(Δ)p(r,t,z)| dz dr` against `(a_{t-s}c)^{-δ}`.
    pub tail: Vec<(f64, EstimateTriple)>,
    /// `∫₀^a∫|ψ(Δ)p(r,t,z+h) - ψ(Δ)p(r,t,z)|` against `|h| a_{t-a}`.
    pub translation: EstimateTriple,
    /// `∫₀^a∫|ψ(Δ)p(r,t,z) - ψ(Δ)p(r,s,z)|` against `(t-s)/(s-a)`.
    pub time_difference: EstimateTriple,
    /// The tail ratio does not grow (beyond 5%) along the `c` sweep.
    pub decay_ok: bool,
}

const REL_TOL: f64 = 1e-3;
const START_NODES: usize = 4;
const MAX_NODES: usize = 2916;

/// Composite midpoint rule for a vector-valued integrand. The cell count
/// triples so earlier nodes are reused; every component's Richardson value
/// must change by less than `REL_TOL` (relative).
fn midpoint_converged<F>(lo: f64, hi: f64, dim: usize, what: &str, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync + Send,
{
    if hi <= lo {
        return Ok(vec![0.0; dim]);
    }
    let width = hi - lo;
    let sums = |n: usize, ks: &[usize]| -> Result<Vec<f64>> {
        let h = width / n as f64;
        let vals = par::map_range(ks.len(), |i| f(lo + (ks[i] as f64 + 0.5) * h)).into_iter().collect::<Result<Vec<_>>>()?;
        Ok((0..dim).map(|k| par::pairwise_sum(&vals.iter().map(|v| v[k]).collect::<Vec<_>>())).collect())
    };
    let mut n = START_NODES;
    let mut acc = sums(n, &(0..n).collect::<Vec<_>>())?;
    let mut prev: Vec<f64> = acc.iter().map(|a| a * width / n as f64).collect();
    let mut extrap: Option<Vec<f64>> = None;
    while n < MAX_NODES {
        n *= 3;
        let fresh: Vec<usize> = (0..n).filter(|k| k % 3 != 1).collect();
        for (a, b) in acc.iter_mut().zip(sums(n, &fresh)?) {
            *a += b;
        }
        let next: Vec<f64> = acc.iter().map(|a| a * width / n as f64).collect();
        let r: Vec<f64> = next.iter().zip(&prev).map(|(a, b)| (9.0 * a - b) / 8.0).collect();
        prev = next;
        if let Some(last) = &extrap {
            let scale = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let done = r.iter().zip(last).all(|(a, b)| (a - b).abs() <= REL_TOL * a.abs().max(1e-12 * scale) + 1e-300);
            if done {
                return Ok(r);
            }
        }
        extrap = Some(r);
    }
    Err(Error::Accuracy(format!("{what}: no convergence with {MAX_NODES} cells")))
}

/// Evaluates the three estimates of the kernel-difference lemma. `grid` is the
/// rescaled grid on which `q₁` lives; it also fixes the point count of the
/// physical grids used for the time difference.
pub fn tail_and_difference_estimates(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    params: &TailParams,
    grid: &GridSpec,
) -> Result<TailReport> {
    let TailParams { s, t, a, .. } = *params;
    if !(t > s && s > a && a > 0.0) {
        return Err(Error::Precondition(format!("need t > s > a > 0, got t={t}, s={s}, a={a}")));
    }
    if params.c_values.is_empty() || params.c_values.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::Precondition("c values must be positive".into()));
    }
    if params.shift.len() != grid.dim || sym.dim() != grid.dim {
        return Err(Error::Configuration("shift, symbol and grid dimensions differ".into()));
    }
    let delta = params.delta.unwrap_or(0.45 * psi.scaling().lower.min(0.5));
    let dim = grid.dim;
    let radius = grid.half_extent * (dim as f64).sqrt();
    let step = grid.step();

    // tail: u = ln τ, integrand T(τ, c) = ∫_{|y| ≥ a_τ c} |q₁(t-τ, t, y)| dy
    let cs = params.c_values.clone();
    let cmin = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let tau_lo = 1.0 / psi.value((radius / cmin).powi(2))?;
    let u_hi = (t - s).ln();
    let u_lo = tau_lo.ln().min(u_hi);
    let tails = midpoint_converged(u_lo, u_hi, cs.len(), "tail estimate", |u| {
        let tau = u.exp();
        let q = compute_kernel(sym, psi, t - tau, t, grid, KernelKind::Q1)?;
        let w = grid.cell_volume();
        let mut out = Vec::with_capacity(cs.len());
        for &c in &cs {
            let rho = q.scale * c;
            let v = par::sum_by(grid.len(), |j| {
                let mut x = [0.0; 3];
                grid.position(j, &mut x[..dim]);
                let r = x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
                // cutoff smeared over one cell so the τ-integrand stays continuous
                ((r - rho) / step + 0.5).clamp(0.0, 1.0) * q.values[j].norm()
            });
            out.push(v * w);
        }
        Ok(out)
    })?;
    let a_ts = scaling_factor(psi, t - s)?;
    let tail: Vec<(f64, EstimateTriple)> =
        cs.iter().zip(&tails).map(|(&c, &l)| (c, EstimateTriple::new(l, (a_ts * c).powf(-delta)))).collect();
    let mut sorted = tail.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let decay_ok = sorted.windows(2).all(|w| w[1].1.ratio <= 1.05 * w[0].1.ratio + 1e-300);

    // translation difference on the rescaled grid
    let engine = FftEngine::new(*grid);
    let h = params.shift.clone();
    let trans = midpoint_converged(0.0, a, 1, "translation difference", |r| {
        let tau = t - r;
        let at = scaling_factor(psi, tau)?;
        let vals = synthesize_checked(&engine, |xi| {
            let m = multiplier(sym, psi, r, t, at, KernelKind::Q1, xi)?;
            let ph: f64 = xi.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() * at;
            Ok(m * (Complex64::new(0.0, ph).exp() - 1.0))
        })?;
        let l1 = par::pairwise_sum(&vals.iter().map(|v| v.norm()).collect::<Vec<_>>()) * grid.cell_volume();
        Ok(vec![l1 / tau])
    })?[0];
    let hn = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    let translation = EstimateTriple::new(trans, hn * scaling_factor(psi, t - a)?);

    // time difference on physical grids matched to the scale of p(r, s)
    let tdiff = midpoint_converged(0.0, a, 1, "time difference", |r| {
        let scale = scaling_factor(psi, s - r)?;
        let g = GridSpec::new(dim, grid.half_extent / scale, grid.points)?;
        let eng = FftEngine::new(g);
        let vals = synthesize_checked(&eng, |xi| {
            let kt = multiplier(sym, psi, r, t, 0.0, KernelKind::PsiDeltaP, xi)?;
            let ks = multiplier(sym, psi, r, s, 0.0, KernelKind::PsiDeltaP, xi)?;
            Ok(kt - ks)
        })?;
        Ok(vec![par::pairwise_sum(&vals.iter().map(|v| v.norm()).collect::<Vec<_>>()) * g.cell_volume()])
    })?[0];
    let time_difference = EstimateTriple::new(tdiff, (t - s) / (s - a));
    Ok(TailReport { delta, tail, translation, time_difference, decay_ok })
}
