use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{length_scale, multiplier, synthesize_checked, KernelKind};
use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{FftEngine, GridSpec};
use crate::symbols::{geometric_grid, BernsteinSpec, SymbolSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HormanderConfig {
    /// Region constant; defaults to `4 c̃₀`.
    pub c0: Option<f64>,
    /// Spatial truncation: the box `[-R, R)^d`.
    pub half_extent: f64,
    /// Base points per axis; refined per time node up to `max_points`.
    pub points: usize,
    pub max_points: usize,
    /// Largest admissible contribution of the outer half of the box.
    pub tail_tolerance: f64,
}

impl HormanderConfig {
    pub fn new(half_extent: f64, points: usize) -> Self {
        Self { c0: None, half_extent, points, max_points: 1 << 16, tail_tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HormanderValue {
    pub value: f64,
    pub c0: f64,
    /// Share of the value carried by the outer half of the box.
    pub shell_fraction: f64,
    /// Length of the `r`-range next to the singular times that could not be resolved
    /// on the finest grid and was evaluated at the nearest resolvable time.
    pub unresolved_strip: f64,
}

/// `c̃₀ = sup φ̃(t+s)/(φ̃(t)+φ̃(s))` over a geometric grid, at least 1.
pub fn estimate_c0_tilde(psi: &BernsteinSpec) -> Result<f64> {
    let taus = geometric_grid(1e-6, 1e6, 8);
    let phis: Vec<f64> = taus.iter().map(|&t| length_scale(psi, t)).collect::<Result<_>>()?;
    let mut best = 1.0f64;
    for i in 0..taus.len() {
        for j in i..taus.len() {
            let v = length_scale(psi, taus[i] + taus[j])? / (phis[i] + phis[j]);
            best = best.max(v);
        }
    }
    Ok(best)
}

const STRIP: f64 = 1e-6;
const REL_TOL: f64 = 1e-3;
const MAX_NODES: usize = 2916;

struct Setup<'a> {
    sym: &'a SymbolSpec,
    psi: &'a BernsteinSpec,
    t: f64,
    s: f64,
    x: &'a [f64],
    y: &'a [f64],
    threshold: f64,
    cfg: &'a HormanderConfig,
}

/// One time piece: value, outer-shell part, frozen strip and last Richardson change.
struct Piece {
    value: f64,
    shell: f64,
    gap: f64,
    change: f64,
}

#[derive(Clone, Copy)]
struct NodeValue {
    total: f64,
    shell: f64,
}

impl Setup<'_> {
    fn eval_at(&self, r: f64, points: usize) -> Result<std::result::Result<NodeValue, usize>> {
        let dim = self.x.len();
        let grid = GridSpec::new(dim, self.cfg.half_extent, points)?;
        let engine = FftEngine::new(grid);
        let (kt, ks) = (r < self.t, r < self.s);
        let res = synthesize_checked(&engine, |xi| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut nb = [0.0; 3];
            for (o, v) in nb.iter_mut().zip(xi) {
                *o = -v;
            }
            let neg = &nb[..xi.len()];
            if kt {
                let m = multiplier(self.sym, self.psi, r, self.t, 0.0, KernelKind::PsiDeltaP, neg)?;
                let ph: f64 = xi.iter().zip(self.x).map(|(a, b)| a * b).sum();
                acc += m * Complex64::new(0.0, -ph).exp();
            }
            if ks {
                let m = multiplier(self.sym, self.psi, r, self.s, 0.0, KernelKind::PsiDeltaP, neg)?;
                let ph: f64 = xi.iter().zip(self.y).map(|(a, b)| a * b).sum();
                acc -= m * Complex64::new(0.0, -ph).exp();
            }
            Ok(acc)
        });
        let vals = match res {
            Ok(v) => v,
            Err(Error::Resolution { required }) => return Ok(Err(required)),
            Err(e) => return Err(e),
        };
        let phit = length_scale(self.psi, (self.t - r).abs())?;
        let period = 2.0 * self.cfg.half_extent;
        let half = 0.5 * self.cfg.half_extent;
        let w = grid.cell_volume();
        let h = 2.0 * self.cfg.half_extent / points as f64;
        let parts = par::map_range(grid.len(), |j| {
            let mut z = [0.0; 3];
            grid.position(j, &mut z[..dim]);
            let mut d2 = 0.0;
            let mut outer = false;
            for a in 0..dim {
                let mut d = (self.x[a] - z[a]).rem_euclid(period);
                if d > 0.5 * period {
                    d -= period;
                }
                d2 += d * d;
                outer |= z[a].abs() > half;
            }
            // region indicator smeared over one cell so the r-integrand stays continuous
            let cover = ((phit + d2.sqrt() - self.threshold) / h + 0.5).clamp(0.0, 1.0);
            let v = cover * vals[j].norm();
            (v, if outer { v } else { 0.0 })
        });
        let total = par::pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>()) * w;
        let shell = par::pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>()) * w;
        Ok(Ok(NodeValue { total, shell }))
    }

    /// Integrand at `r`, refining the grid as needed; `None` if even the
    /// finest grid cannot resolve the kernels.
    fn integrand(&self, r: f64) -> Result<Option<NodeValue>> {
        let mut points = self.cfg.points;
        loop {
            match self.eval_at(r, points)? {
                Ok(v) => return Ok(Some(v)),
                Err(req) if req <= self.cfg.max_points && req > points => points = req,
                Err(_) if points < self.cfg.max_points => points = self.cfg.max_points,
                Err(_) => return Ok(None),
            }
        }
    }

    /// `∫_lo^hi I(r) dr` with the singular endpoint at `hi`, in the variable `ln(hi - r)`.
    /// Below the smallest resolvable gap the integrand is frozen at its value there.
    fn piece(&self, lo: f64, hi: f64) -> Result<Piece> {
        if hi <= lo {
            return Ok(Piece { value: 0.0, shell: 0.0, gap: 0.0, change: 0.0 });
        }
        let span = hi - lo;
        let mut gap = span * STRIP;
        let frozen = loop {
            if let Some(v) = self.integrand(hi - gap)? {
                break v;
            }
            gap *= 2.0;
            if gap > span {
                return Err(Error::Resolution { required: self.cfg.max_points * 2 });
            }
        };
        let (u0, u1) = ((span * STRIP).ln(), span.ln());
        let width = u1 - u0;
        let node = |u: f64| -> Result<(f64, f64)> {
            let tau = u.exp();
            if tau <= gap {
                return Ok((frozen.total * tau, frozen.shell * tau));
            }
            let v = self.integrand(hi - tau)?.unwrap_or(frozen);
            Ok((v.total * tau, v.shell * tau))
        };
        // node sums over the cell midpoints in `ks` of an `n`-cell rule
        let sums = |n: usize, ks: &[usize]| -> Result<(f64, f64)> {
            let du = width / n as f64;
            let vals = par::map_range(ks.len(), |i| node(u0 + (ks[i] as f64 + 0.5) * du))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let a = par::pairwise_sum(&vals.iter().map(|v| v.0).collect::<Vec<_>>());
            let b = par::pairwise_sum(&vals.iter().map(|v| v.1).collect::<Vec<_>>());
            Ok((a, b))
        };
        // tripling keeps every earlier midpoint; midpoint sums converge at second
        // order, so stop on successive Richardson values
        let mut n = 4;
        let all: Vec<usize> = (0..n).collect();
        let mut acc = sums(n, &all)?;
        let mut prev = (acc.0 * width / n as f64, acc.1 * width / n as f64);
        let mut extrap: Option<(f64, f64)> = None;
        let mut change = f64::INFINITY;
        while n < MAX_NODES {
            n *= 3;
            let fresh: Vec<usize> = (0..n).filter(|k| k % 3 != 1).collect();
            let add = sums(n, &fresh)?;
            acc = (acc.0 + add.0, acc.1 + add.1);
            let next = (acc.0 * width / n as f64, acc.1 * width / n as f64);
            let r = ((9.0 * next.0 - prev.0) / 8.0, (9.0 * next.1 - prev.1) / 8.0);
            prev = next;
            if let Some(last) = extrap {
                change = (r.0 - last.0).abs();
                if change <= REL_TOL * r.0.abs() + 1e-14 {
                    return Ok(Piece { value: r.0, shell: r.1.max(0.0), gap, change });
                }
            }
            extrap = Some(r);
        }
        let (value, shell) = extrap.unwrap_or(prev);
        Ok(Piece { value, shell: shell.max(0.0), gap, change })
    }
}

/// `∫₀^∞ ∫_A |1_{r<t}ψ(Δ)p(r,t,x-z) - 1_{r<s}ψ(Δ)p(r,s,y-z)| dz dr`, where `A` is the
/// complement of the parabolic neighbourhood of `(t, x)`.
pub fn hormander_integral(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    (t, x): (f64, &[f64]),
    (s, y): (f64, &[f64]),
    cfg: &HormanderConfig,
) -> Result<HormanderValue> {
    if x.len() != sym.dim() || y.len() != sym.dim() {
        return Err(Error::Configuration("point and symbol dimensions differ".into()));
    }
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::Precondition("times must be positive".into()));
    }
    let c0 = match cfg.c0 {
        Some(c) => c,
        None => 4.0 * estimate_c0_tilde(psi)?,
    };
    if t == s && x == y {
        return Ok(HormanderValue { value: 0.0, c0, shell_fraction: 0.0, unresolved_strip: 0.0 });
    }
    let dxy = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let setup = Setup {
        sym,
        psi,
        t,
        s,
        x,
        y,
        threshold: c0 * (length_scale(psi, (t - s).abs())? + dxy),
        cfg,
    };
    let (lo, hi) = (t.min(s), t.max(s));
    let a = setup.piece(0.0, lo)?;
    let b = setup.piece(lo, hi)?;
    let value = a.value + b.value;
    let shell = a.shell + b.shell;
    if a.change + b.change > REL_TOL * value + 1e-14 {
        return Err(Error::Accuracy("Hörmander integral did not converge".into()));
    }
    if shell > cfg.tail_tolerance {
        return Err(Error::Truncation { suggested: 2.0 * cfg.half_extent });
    }
    let fraction = if value > 0.0 { shell / value } else { 0.0 };
    Ok(HormanderValue { value, c0, shell_fraction: fraction, unresolved_strip: a.gap.max(b.gap) })
}

/// Supremum of the integral over a list of point pairs.
pub fn hormander_sup(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    pairs: &[((f64, Vec<f64>), (f64, Vec<f64>))],
    cfg: &HormanderConfig,
) -> Result<(f64, Vec<HormanderValue>)> {
    let mut cfg = cfg.clone();
    if cfg.c0.is_none() {
        cfg.c0 = Some(4.0 * estimate_c0_tilde(psi)?);
    }
    let vals = pairs
        .iter()
        .map(|((t, x), (s, y))| hormander_integral(sym, psi, (*t, x), (*s, y), &cfg))
        .collect::<Result<Vec<_>>>()?;
    let sup = vals.iter().map(|v| v.value).fold(0.0, f64::max);
    Ok((sup, vals))
}
