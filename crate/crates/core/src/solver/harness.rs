use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{phi_potential_norm, solve, SpaceTimeField};
use crate::error::{Error, Result};
use crate::spectral::GridSpec;
use crate::symbols::{BernsteinSpec, SymbolSpec};

/// Seeded random band-limited sources with frequencies fixed in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceFamily {
    pub count: usize,
    pub seed: u64,
    /// Largest frequency magnitude per axis (physical units).
    pub max_frequency: f64,
    pub modes: usize,
}

/// `Σ_m A_m (1 + ½ sin(ω_m t + θ_m)) cos(ξ_m·x + φ_m)` with every `ξ_m` on the
/// frequency lattice of `grid` and `|ξ_m,i| ≤ max_frequency`.
pub fn band_limited_source(
    grid: GridSpec,
    t_end: f64,
    steps: usize,
    seed: u64,
    max_frequency: f64,
    modes: usize,
) -> Result<SpaceTimeField> {
    let kmax = (max_frequency * grid.half_extent / PI).floor() as i64;
    if kmax < 1 || kmax >= (grid.points / 2) as i64 {
        return Err(Error::Configuration(format!("band limit {max_frequency} not representable on the grid")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64, Vec<f64>, f64)> = (0..modes.max(1))
        .map(|_| {
            let amp = rng.random_range(0.2..1.0);
            let omega = rng.random_range(0.0..2.0 * PI / t_end);
            let theta = rng.random_range(0.0..2.0 * PI);
            let xi = (0..grid.dim)
                .map(|_| rng.random_range(-kmax..=kmax) as f64 * PI / grid.half_extent)
                .collect();
            let phase = rng.random_range(0.0..2.0 * PI);
            (amp, omega, theta, xi, phase)
        })
        .collect();
    SpaceTimeField::from_fn(grid, t_end, steps, |t, x| {
        terms
            .iter()
            .map(|(a, w, th, xi, ph)| {
                let dot: f64 = xi.iter().zip(x).map(|(p, q)| p * q).sum();
                a * (1.0 + 0.5 * (w * t + th).sin()) * (dot + ph).cos()
            })
            .sum()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub half_extent: f64,
    pub ladder: Vec<usize>,
    pub steps: usize,
    pub t_end: f64,
    pub ps: Vec<f64>,
    pub family: SourceFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessRow {
    pub source: usize,
    pub p: f64,
    pub points: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub rows: Vec<HarnessRow>,
    /// `(p, points, max ratio over the family)`.
    pub max_ratio: Vec<(f64, usize, f64)>,
    /// Largest `max/min` of the per-level maxima across the ladder, over `p`.
    pub ladder_spread: f64,
}

impl HarnessReport {
    pub fn max_for(&self, p: f64) -> f64 {
        self.max_ratio.iter().filter(|r| r.0 == p).map(|r| r.2).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,p,points,ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{:e}\n", r.source, r.p, r.points, r.ratio));
        }
        s
    }
}

/// Ratios `‖φ(Δ)u‖_p / ‖f‖_p` for every source, exponent and resolution.
pub fn estimate_ratio_harness(sym: &SymbolSpec, phi: &BernsteinSpec, cfg: &HarnessConfig) -> Result<HarnessReport> {
    if cfg.ps.iter().any(|p| *p < 2.0) {
        return Err(Error::Domain("the harness covers p >= 2 only".into()));
    }
    let mut rows = Vec::new();
    let mut max_ratio = Vec::new();
    for &m in &cfg.ladder {
        let grid = GridSpec::new(sym.dim(), cfg.half_extent, m)?;
        let mut maxes = vec![0.0f64; cfg.ps.len()];
        for i in 0..cfg.family.count {
            let f = band_limited_source(
                grid,
                cfg.t_end,
                cfg.steps,
                cfg.family.seed.wrapping_add(i as u64),
                cfg.family.max_frequency,
                cfg.family.modes,
            )?;
            let u = solve(sym, &f)?;
            for (pi, &p) in cfg.ps.iter().enumerate() {
                let r = phi_potential_norm(&u, phi, p, Some(&f))?.ratio.unwrap_or(0.0);
                maxes[pi] = maxes[pi].max(r);
                rows.push(HarnessRow { source: i, p, points: m, ratio: r });
            }
        }
        for (pi, &p) in cfg.ps.iter().enumerate() {
            max_ratio.push((p, m, maxes[pi]));
        }
    }
    let mut spread = 1.0f64;
    for &p in &cfg.ps {
        let v: Vec<f64> = max_ratio.iter().filter(|r| r.0 == p).map(|r| r.2).collect();
        let hi = v.iter().cloned().fold(0.0, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo > 0.0 {
            spread = spread.max(hi / lo);
        }
    }
    Ok(HarnessReport { rows, max_ratio, ladder_spread: spread })
}

/// Ratio for `f = cos(ξ₀·x)` constant in time and a real, time-constant symbol
/// with `Ψ(ξ₀) = -λ`: `u = cos(ξ₀·x)(1 - e^{-λt})/λ`, with trapezoid weights in time.
pub fn single_mode_ratio(lambda: f64, phi_value: f64, p: f64, t_end: f64, steps: usize) -> f64 {
    let dt = t_end / steps as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..=steps {
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        let t = k as f64 * dt;
        let g = if lambda == 0.0 { t } else { -(-lambda * t).exp_m1() / lambda };
        num += w * (phi_value * g).abs().powf(p);
        den += w;
    }
    (num / den).powf(1.0 / p)
}
