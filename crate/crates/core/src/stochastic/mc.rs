use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{path_rngs, sample_increment, ProcessSpec};
use crate::error::{Error, Result};
use crate::par;
use crate::solver::SpaceTimeField;
use crate::spectral::FftEngine;

/// Multilinear interpolation of time level `k` at `x`, periodic in space.
pub fn interpolate(field: &SpaceTimeField, k: usize, x: &[f64]) -> f64 {
    let g = field.grid();
    let level = field.level(k);
    let m = g.points;
    let h = g.step();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..g.dim {
        let u = (x[a] + g.half_extent) / h;
        let fl = u.floor();
        frac[a] = u - fl;
        base[a] = (fl as i64).rem_euclid(m as i64) as usize;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << g.dim) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for a in 0..g.dim {
            let bit = (corner >> a) & 1;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            flat = flat * m + (base[a] + bit) % m;
        }
        if w != 0.0 {
            acc += w * level[flat].re;
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub t: f64,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub paths: usize,
}

/// `u(t,x) = ∫₀ᵗ E f(s, x + X_t - X_s) ds` by simulation on the mesh of `f`,
/// with trapezoid weights in time.
pub fn mc_solution(
    spec: &ProcessSpec,
    f: &SpaceTimeField,
    t: f64,
    points: &[Vec<f64>],
    paths: usize,
    seed: u64,
) -> Result<McResult> {
    let g = *f.grid();
    if spec.dim != g.dim {
        return Err(Error::Configuration("process and field dimensions differ".into()));
    }
    if paths < 2 {
        return Err(Error::TooFewSamples { required: 2, got: paths });
    }
    let dt = f.dt();
    let kt = (t / dt).round() as usize;
    if kt > f.steps() || ((kt as f64) * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Configuration(format!("t = {t} is not a time level of the source mesh")));
    }
    for x in points {
        if x.len() != g.dim || x.iter().any(|v| !(*v >= -g.half_extent && *v < g.half_extent)) {
            return Err(Error::Extrapolation(format!("point {x:?} lies outside the grid box")));
        }
    }
    let npts = points.len();
    if kt == 0 {
        return Ok(McResult { t, points: points.to_vec(), values: vec![0.0; npts], standard_errors: vec![0.0; npts], paths });
    }
    let times = f.times();
    let weights: Vec<f64> = (0..=kt).map(|j| if j == 0 || j == kt { 0.5 * dt } else { dt }).collect();
    let per_path: Vec<Vec<f64>> = par::map_range(paths, |i| -> Result<Vec<f64>> {
        let (mut a, mut b) = path_rngs(seed, i as u64);
        let mut incs = Vec::with_capacity(kt);
        for j in 0..kt {
            incs.push(sample_increment(spec, times[j], times[j + 1], &mut a, &mut b)?);
        }
        // suffix sums Y_j = X_t - X_{t_j}
        let mut y = vec![0.0; g.dim];
        let mut out = vec![0.0; npts];
        let mut z = vec![0.0; g.dim];
        for j in (0..=kt).rev() {
            if j < kt {
                for (yy, d) in y.iter_mut().zip(&incs[j]) {
                    *yy += d;
                }
            }
            for (p, x) in points.iter().enumerate() {
                for a in 0..g.dim {
                    z[a] = x[a] + y[a];
                }
                out[p] += weights[j] * interpolate(f, j, &z);
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let n = paths as f64;
    let mut values = Vec::with_capacity(npts);
    let mut ses = Vec::with_capacity(npts);
    for p in 0..npts {
        let col: Vec<f64> = per_path.iter().map(|v| v[p]).collect();
        let mean = par::pairwise_sum(&col) / n;
        let sq: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = par::pairwise_sum(&sq) / (n - 1.0);
        values.push(mean);
        ses.push((var / n).sqrt());
    }
    Ok(McResult { t, points: points.to_vec(), values, standard_errors: ses, paths })
}

/// `g(t, x) = f(t, x - b(t))` by a spectral shift of every time level.
pub fn shift_field<F>(f: &SpaceTimeField, b: F) -> Result<SpaceTimeField>
where
    F: Fn(f64) -> Vec<f64>,
{
    let g = *f.grid();
    let engine = FftEngine::new(g);
    let mut values = Vec::with_capacity(f.values().len());
    for k in 0..=f.steps() {
        let shift = b(f.time(k));
        if shift.len() != g.dim {
            return Err(Error::Configuration("shift has the wrong dimension".into()));
        }
        let mut v = engine.analyze(f.level(k).to_vec());
        par::for_each_mut(&mut v, |j, c| {
            if g.is_nyquist(j) {
                *c = Complex64::new(0.0, 0.0);
                return;
            }
            let mut xi = [0.0; 3];
            g.frequency(j, &mut xi[..g.dim]);
            let ph: f64 = xi[..g.dim].iter().zip(&shift).map(|(a, b)| a * b).sum();
            *c *= Complex64::new(0.0, -ph).exp();
        });
        values.extend(engine.synthesize(v));
    }
    SpaceTimeField::new(g, f.t_end(), f.steps(), values)
}
