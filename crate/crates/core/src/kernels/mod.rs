//! Transition kernels, their rescaled versions, and numerical checks of the
//! kernel estimates they satisfy.

mod bounds;
mod hormander;
mod sandwich;
mod tails;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use bounds::{verify_kernel_bounds, KernelBoundRow, KernelBoundsReport};
pub use hormander::{estimate_c0_tilde, hormander_integral, hormander_sup, HormanderConfig, HormanderValue};
pub use sandwich::{inverse_sandwich, scaled_symbol_sandwich, SandwichReport};
pub use tails::{tail_and_difference_estimates, EstimateTriple, TailParams, TailReport};

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{check_resolved, required_points, FftEngine, GridSpec};
use crate::symbols::{BernsteinSpec, SymbolSpec};

/// `a_τ = ψ⁻¹(1/τ)^{1/2}`.
pub fn scaling_factor(psi: &BernsteinSpec, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {tau}")));
    }
    Ok(psi.inverse(1.0 / tau)?.sqrt())
}

/// `1/a_τ`, the spatial length matched to duration `τ`; zero at `τ = 0`.
pub fn length_scale(psi: &BernsteinSpec, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / scaling_factor(psi, tau)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `p(s,t,·)`
    P,
    /// `ψ(Δ)p(s,t,·)`
    PsiDeltaP,
    /// Rescaled `ψ(Δ)p`.
    Q1,
    /// Rescaled gradient component (0-based axis).
    Q2(usize),
    /// Rescaled time derivative.
    Q3,
}

impl KernelKind {
    pub fn label(&self) -> String {
        match self {
            KernelKind::P => "p".into(),
            KernelKind::PsiDeltaP => "psidp".into(),
            KernelKind::Q1 => "q1".into(),
            KernelKind::Q2(l) => format!("q2_{}", l + 1),
            KernelKind::Q3 => "q3".into(),
        }
    }

    pub fn is_scaled(&self) -> bool {
        matches!(self, KernelKind::Q1 | KernelKind::Q2(_) | KernelKind::Q3)
    }
}

/// Kernel values on a grid (rescaled coordinates for the `q` kernels).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSnapshot {
    pub kind: KernelKind,
    pub s: f64,
    pub t: f64,
    pub grid: GridSpec,
    /// `a_{t-s}`
    pub scale: f64,
    pub values: Vec<Complex64>,
}

impl KernelSnapshot {
    pub fn max_re(&self) -> f64 {
        self.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max)
    }

    pub fn max_im(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `Σ K h^d`.
    pub fn mass(&self) -> Complex64 {
        let w = self.grid.cell_volume();
        let re = par::pairwise_sum(&self.values.iter().map(|v| v.re).collect::<Vec<_>>());
        let im = par::pairwise_sum(&self.values.iter().map(|v| v.im).collect::<Vec<_>>());
        Complex64::new(re * w, im * w)
    }

    /// `∫ | |x|^{d/2+δ} K |² dx` on the grid.
    pub fn weighted_norm(&self, delta: f64) -> f64 {
        let g = self.grid;
        let e = g.dim as f64 + 2.0 * delta;
        let w = g.cell_volume();
        par::sum_by(g.len(), |j| {
            let mut x = [0.0; 3];
            g.position(j, &mut x[..g.dim]);
            let r2: f64 = x[..g.dim].iter().map(|v| v * v).sum();
            r2.powf(e / 2.0) * self.values[j].norm_sqr()
        }) * w
    }

    pub fn to_csv(&self) -> String {
        let g = self.grid;
        let mut s = String::new();
        for a in 0..g.dim {
            s.push_str(&format!("x{},", a + 1));
        }
        s.push_str("re,im\n");
        let mut x = [0.0; 3];
        for (j, v) in self.values.iter().enumerate() {
            g.position(j, &mut x[..g.dim]);
            for c in &x[..g.dim] {
                s.push_str(&format!("{c:e},"));
            }
            s.push_str(&format!("{:e},{:e}\n", v.re, v.im));
        }
        s
    }
}

/// Multiplier of `kind` at frequency `xi` (physical for `p`, rescaled for `q`).
pub(crate) fn multiplier(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    s: f64,
    t: f64,
    a: f64,
    kind: KernelKind,
    xi: &[f64],
) -> Result<Complex64> {
    let tau = t - s;
    match kind {
        KernelKind::P => Ok(sym.accumulate_unchecked(s, t, xi)?.exp()),
        KernelKind::PsiDeltaP => {
            let l: f64 = xi.iter().map(|v| v * v).sum();
            Ok(sym.accumulate_unchecked(s, t, xi)?.exp() * psi.value_or_zero(l))
        }
        _ => {
            let mut y = [0.0; 3];
            for (o, v) in y.iter_mut().zip(xi) {
                *o = a * v;
            }
            let y = &y[..xi.len()];
            let l: f64 = y.iter().map(|v| v * v).sum();
            let base = sym.accumulate_unchecked(s, t, y)?.exp() * (tau * psi.value_or_zero(l));
            Ok(match kind {
                KernelKind::Q1 => base,
                KernelKind::Q2(ell) => base * xi[ell],
                KernelKind::Q3 => base * sym.eval(t, y) * tau,
                _ => unreachable!(),
            })
        }
    }
}

fn check_pair(sym: &SymbolSpec, s: f64, t: f64, grid: &GridSpec) -> Result<()> {
    if s > t {
        return Err(Error::Ordering { s, t });
    }
    if !(s < t) || s < 0.0 {
        return Err(Error::Precondition(format!("need 0 <= s < t, got s = {s}, t = {t}")));
    }
    if sym.dim() != grid.dim {
        return Err(Error::Configuration(format!("symbol dimension {} but grid dimension {}", sym.dim(), grid.dim)));
    }
    Ok(())
}

/// Synthesizes a sampled multiplier, checking resolution first.
pub(crate) fn synthesize_checked<F>(engine: &FftEngine, f: F) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync + Send,
{
    let grid = *engine.grid();
    let mult: Vec<Complex64> = par::map_range(grid.len(), |k| {
        let mut xi = [0.0; 3];
        grid.frequency(k, &mut xi[..grid.dim]);
        f(&xi[..grid.dim])
    })
    .into_iter()
    .collect::<Result<_>>()?;
    if !check_resolved(&grid, &mult) {
        let peak = mult.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let need = required_points(&grid, peak, |xi| f(xi).unwrap_or(Complex64::new(f64::INFINITY, 0.0)));
        return Err(Error::Resolution { required: need.max(grid.points * 2) });
    }
    let mut mult = mult;
    for (k, v) in mult.iter_mut().enumerate() {
        if grid.is_nyquist(k) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    Ok(engine.synthesize(mult))
}

/// `p` or `ψ(Δ)p` (or a rescaled kernel) on `grid`.
pub fn compute_kernel(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    s: f64,
    t: f64,
    grid: &GridSpec,
    kind: KernelKind,
) -> Result<KernelSnapshot> {
    check_pair(sym, s, t, grid)?;
    if let KernelKind::Q2(l) = kind {
        if l >= grid.dim {
            return Err(Error::Configuration(format!("gradient axis {l} out of range")));
        }
    }
    let a = scaling_factor(psi, t - s)?;
    let engine = FftEngine::new(*grid);
    let values = synthesize_checked(&engine, |xi| multiplier(sym, psi, s, t, a, kind, xi))?;
    Ok(KernelSnapshot { kind, s, t, grid: *grid, scale: a, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledKernels {
    pub q1: KernelSnapshot,
    pub q2: Vec<KernelSnapshot>,
    pub q3: KernelSnapshot,
}

impl ScaledKernels {
    pub fn all(&self) -> Vec<&KernelSnapshot> {
        let mut v = vec![&self.q1];
        v.extend(self.q2.iter());
        v.push(&self.q3);
        v
    }
}

/// `q₁`, `q₂ℓ` for every axis, and `q₃`.
pub fn compute_scaled_kernels(
    sym: &SymbolSpec,
    psi: &BernsteinSpec,
    s: f64,
    t: f64,
    grid: &GridSpec,
) -> Result<ScaledKernels> {
    let q1 = compute_kernel(sym, psi, s, t, grid, KernelKind::Q1)?;
    let q2 = (0..grid.dim)
        .map(|l| compute_kernel(sym, psi, s, t, grid, KernelKind::Q2(l)))
        .collect::<Result<Vec<_>>>()?;
    let q3 = compute_kernel(sym, psi, s, t, grid, KernelKind::Q3)?;
    Ok(ScaledKernels { q1, q2, q3 })
}
