//! Spectral Duhamel solver for `∂u/∂t = Ψ(t, iD)u + f`, `u(0) = 0`, with
//! multiplier application, potential norms and an estimate harness.

mod field;
mod harness;
mod norms;
mod weak;

use num_complex::Complex64;

pub use field::SpaceTimeField;
pub use harness::{
    band_limited_source, estimate_ratio_harness, single_mode_ratio, HarnessConfig, HarnessReport, HarnessRow,
    SourceFamily,
};
pub use norms::{phi_potential_norm, NormReport};
pub use weak::{bump_family, weak_residual, BumpTest};

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::FftEngine;
use crate::symbols::{BernsteinSpec, SymbolSpec};

/// Re Φ above this on any step marks the symbol as non-dissipative.
pub const INSTABILITY_TOL: f64 = 1e-8;

/// `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (e^z - 1 - z)/z²`.
pub fn etd_weights(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.5 {
        let mut p1 = Complex64::new(0.0, 0.0);
        let mut p2 = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..20 {
            fact *= (n + 1) as f64;
            p1 += zn / fact;
            p2 += zn / (fact * (n + 2) as f64);
            zn *= z;
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

/// Spectral coefficients of every time level (Nyquist modes removed).
pub(crate) fn transform_levels(field: &SpaceTimeField, engine: &FftEngine) -> Vec<Vec<Complex64>> {
    let g = *field.grid();
    (0..=field.steps())
        .map(|k| {
            let mut v = engine.analyze(field.level(k).to_vec());
            for (j, c) in v.iter_mut().enumerate() {
                if g.is_nyquist(j) {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
            v
        })
        .collect()
}

pub(crate) fn synthesize_levels(
    template: &SpaceTimeField,
    engine: &FftEngine,
    levels: Vec<Vec<Complex64>>,
) -> Result<SpaceTimeField> {
    let mut values = Vec::with_capacity(template.values().len());
    for l in levels {
        values.extend(engine.synthesize(l));
    }
    SpaceTimeField::new(*template.grid(), template.t_end(), template.steps(), values)
}

/// Exponential integrator with the source interpolated linearly on each step:
/// `û_{k+1} = e^z û_k + Δt(φ₁(z) - φ₂(z)) f̂_k + Δt φ₂(z) f̂_{k+1}`, `z = Φ(t_k, t_{k+1}, ξ)`.
pub fn solve(sym: &SymbolSpec, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let g = *f.grid();
    if sym.dim() != g.dim {
        return Err(Error::Configuration(format!("symbol dimension {} but grid dimension {}", sym.dim(), g.dim)));
    }
    let engine = FftEngine::new(g);
    let fh = transform_levels(f, &engine);
    let steps = f.steps();
    let dt = f.dt();
    let times = f.times();
    let modes: Vec<Vec<Complex64>> = par::map_range(g.len(), |j| -> Result<Vec<Complex64>> {
        let mut xi = [0.0; 3];
        g.frequency(j, &mut xi[..g.dim]);
        let xi = &xi[..g.dim];
        let mut out = Vec::with_capacity(steps + 1);
        let mut u = Complex64::new(0.0, 0.0);
        out.push(u);
        if g.is_nyquist(j) {
            out.resize(steps + 1, u);
            return Ok(out);
        }
        for k in 0..steps {
            let z = sym.accumulate_unchecked(times[k], times[k + 1], xi)?;
            if z.re > INSTABILITY_TOL {
                return Err(Error::Instability(format!(
                    "Re Φ = {:e} > 0 on [{}, {}] at ξ = {:?}",
                    z.re,
                    times[k],
                    times[k + 1],
                    xi
                )));
            }
            let (p1, p2) = etd_weights(z);
            u = z.exp() * u + (p1 - p2) * fh[k][j] * dt + p2 * fh[k + 1][j] * dt;
            out.push(u);
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let levels: Vec<Vec<Complex64>> = (0..=steps).map(|k| modes.iter().map(|m| m[k]).collect()).collect();
    synthesize_levels(f, &engine, levels)
}

/// Fourier multiplier applied level by level.
pub enum Multiplier<'a> {
    /// `φ(|ξ|²)`, i.e. `φ(Δ)` in the sign convention of the potential spaces.
    Phi(&'a BernsteinSpec),
    /// `Ψ(t_k, ξ)` at each level's time.
    Symbol(&'a SymbolSpec),
    /// `conj Ψ(t_k, ξ)`: the formal adjoint.
    AdjointSymbol(&'a SymbolSpec),
}

pub fn apply_multiplier(field: &SpaceTimeField, m: Multiplier<'_>) -> Result<SpaceTimeField> {
    let g = *field.grid();
    if let Multiplier::Symbol(s) | Multiplier::AdjointSymbol(s) = &m {
        if s.dim() != g.dim {
            return Err(Error::Configuration("symbol and field dimensions differ".into()));
        }
    }
    let engine = FftEngine::new(g);
    let mut levels = Vec::with_capacity(field.steps() + 1);
    for k in 0..=field.steps() {
        let t = field.time(k);
        let mut v = engine.analyze(field.level(k).to_vec());
        par::for_each_mut(&mut v, |j, c| {
            let mut xi = [0.0; 3];
            g.frequency(j, &mut xi[..g.dim]);
            let xi = &xi[..g.dim];
            let factor = match &m {
                Multiplier::Phi(phi) => Complex64::new(phi.value_or_zero(xi.iter().map(|v| v * v).sum()), 0.0),
                Multiplier::Symbol(s) if g.is_nyquist(j) && !s.is_real() => Complex64::new(0.0, 0.0),
                Multiplier::AdjointSymbol(s) if g.is_nyquist(j) && !s.is_real() => Complex64::new(0.0, 0.0),
                Multiplier::Symbol(s) => s.eval(t, xi),
                Multiplier::AdjointSymbol(s) => s.eval(t, xi).conj(),
            };
            *c *= factor;
        });
        levels.push(v);
    }
    synthesize_levels(field, &engine, levels)
}

/// `∂_t u - A(t)u` with second-order differences in time (one-sided at the ends).
pub fn discrete_source(u: &SpaceTimeField, sym: &SymbolSpec) -> Result<SpaceTimeField> {
    let au = apply_multiplier(u, Multiplier::Symbol(sym))?;
    let k_max = u.steps();
    let dt = u.dt();
    let n = u.grid().len();
    let mut out = au.scaled(-1.0).into_values();
    for k in 0..=k_max {
        for j in 0..n {
            let v = |i: usize| u.level(i)[j];
            let d = if k_max < 2 {
                (v(1) - v(0)) / dt
            } else if k == 0 {
                (v(0) * -3.0 + v(1) * 4.0 - v(2)) / (2.0 * dt)
            } else if k == k_max {
                (v(k) * 3.0 - v(k - 1) * 4.0 + v(k - 2)) / (2.0 * dt)
            } else {
                (v(k + 1) - v(k - 1)) / (2.0 * dt)
            };
            out[k * n + j] += d;
        }
    }
    SpaceTimeField::new(*u.grid(), u.t_end(), k_max, out)
}
