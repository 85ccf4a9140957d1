//! Periodic grids on `[-L, L)^d` and the FFT plumbing on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// `M^d` points `x_j = -L + j h`, `h = 2L/M`, with frequencies `kπ/L` in FFT order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_extent: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Configuration(format!("dimension {dim} not in 1..=3")));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::Configuration("half extent must be positive".into()));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::Configuration(format!("points per axis must be a power of two >= 16, got {points}")));
        }
        Ok(Self { dim, half_extent, points })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_extent / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.step()
    }

    /// Signed frequency index of FFT slot `k`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let m = self.points as i64;
        let k = k as i64;
        if k < m / 2 {
            k
        } else {
            k - m
        }
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.signed_index(k) as f64 * PI / self.half_extent
    }

    /// Multi-index of a flat (row-major) index.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn frequency(&self, flat: usize, out: &mut [f64]) {
        let mut f = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.freq(f % self.points);
            f /= self.points;
        }
    }

    pub fn position(&self, flat: usize, out: &mut [f64]) {
        let mut f = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.coord(f % self.points);
            f /= self.points;
        }
    }

    /// `(-1)^{k_1+...+k_d}` for a flat frequency index.
    pub fn parity(&self, flat: usize) -> f64 {
        let mut f = flat;
        let mut s = 0usize;
        for _ in 0..self.dim {
            s += f % self.points;
            f /= self.points;
        }
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Whether some component of the frequency is the Nyquist index `M/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let mut f = flat;
        for _ in 0..self.dim {
            if f % self.points == self.points / 2 {
                return true;
            }
            f /= self.points;
        }
        false
    }

    /// Same physical box with `factor` times the points.
    pub fn refined(&self, factor: usize) -> Self {
        Self { points: self.points * factor, ..*self }
    }

    /// Box and point count scaled together, keeping the step.
    pub fn enlarged(&self, factor: usize) -> Self {
        Self { half_extent: self.half_extent * factor as f64, points: self.points * factor, ..*self }
    }

    /// Index of the grid point nearest to `x` on one axis (periodic).
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x + self.half_extent) / self.step()).round() as i64;
        j.rem_euclid(self.points as i64) as usize
    }
}

/// Unnormalized multidimensional FFT on a [`GridSpec`].
pub struct FftEngine {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftEngine {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self { grid, forward: planner.plan_fft_forward(grid.points), inverse: planner.plan_fft_inverse(grid.points) }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `X_k = Σ_j x_j e^{-2πi k·j/M}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// `x_j = Σ_k X_k e^{2πi k·j/M}` (no normalization).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.grid.len());
        let m = self.grid.points;
        let n = data.len();
        for axis in (0..self.grid.dim).rev() {
            let stride = m.pow((self.grid.dim - 1 - axis) as u32);
            if stride == 1 {
                par::for_each_chunk_mut(data, m.max(4096 / m * m), |_, chunk| {
                    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
                    for line in chunk.chunks_mut(m) {
                        plan.process_with_scratch(line, &mut scratch);
                    }
                });
                continue;
            }
            // block = m * stride contiguous values holding `stride` interleaved lines
            let block = m * stride;
            par::for_each_chunk_mut(data, block, |_, chunk| {
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
                for off in 0..stride {
                    for i in 0..m {
                        line[i] = chunk[off + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for i in 0..m {
                        chunk[off + i * stride] = line[i];
                    }
                }
            });
            debug_assert_eq!(n % block, 0);
        }
    }

    /// Physical samples from a multiplier: `g(x_j) = (2L)^{-d} Σ_k m_k e^{iξ_k·x_j}`.
    /// The input is consumed in FFT order.
    pub fn synthesize(&self, mut mult: Vec<Complex64>) -> Vec<Complex64> {
        let g = self.grid;
        let norm = (2.0 * g.half_extent).powi(g.dim as i32).recip();
        par::for_each_mut(&mut mult, |k, v| *v *= g.parity(k) * norm);
        self.inverse(&mut mult);
        mult
    }

    /// Spectral coefficients `(h^d) Σ_j g(x_j) e^{-iξ_k·x_j}`, the inverse of [`Self::synthesize`].
    pub fn analyze(&self, mut vals: Vec<Complex64>) -> Vec<Complex64> {
        let g = self.grid;
        self.forward(&mut vals);
        let w = g.cell_volume();
        par::for_each_mut(&mut vals, |k, v| *v *= g.parity(k) * w);
        vals
    }
}

/// Evaluates a multiplier on every grid frequency (FFT order).
pub fn sample_multiplier<F>(grid: &GridSpec, f: F) -> Vec<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    par::map_range(grid.len(), |k| {
        let mut xi = [0.0; 3];
        grid.frequency(k, &mut xi[..grid.dim]);
        f(&xi[..grid.dim])
    })
}

/// Checks that `|m|` on the Nyquist planes is below `1e-12 max|m|`.
pub fn check_resolved(grid: &GridSpec, mult: &[Complex64]) -> bool {
    let max = mult.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let edge = (0..grid.len()).filter(|&k| grid.is_nyquist(k)).map(|k| mult[k].norm()).fold(0.0f64, f64::max);
    edge.is_finite() && max.is_finite() && edge <= RESOLUTION_TOL * max
}

pub const RESOLUTION_TOL: f64 = 1e-12;

/// Smallest power-of-two `M' >= M` with the multiplier below tolerance at the
/// Nyquist frequency of every axis direction; `reference` is the peak magnitude.
pub fn required_points<F>(grid: &GridSpec, reference: f64, f: F) -> usize
where
    F: Fn(&[f64]) -> Complex64,
{
    let mut m = grid.points;
    while m < 1 << 26 {
        let kmax = m as f64 * PI / (2.0 * grid.half_extent);
        let ok = (0..grid.dim).all(|a| {
            let mut xi = vec![0.0; grid.dim];
            xi[a] = kmax;
            let p = f(&xi).norm();
            let mut xn = xi.clone();
            xn[a] = -kmax;
            let q = f(&xn).norm();
            p.max(q) <= RESOLUTION_TOL * reference
        });
        if ok {
            return m;
        }
        m *= 2;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesize_analyze_roundtrip_2d() {
        let g = GridSpec::new(2, 3.0, 16).unwrap();
        let e = FftEngine::new(g);
        let vals: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let back = e.synthesize(e.analyze(vals.clone()));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_synthesis() {
        let g = GridSpec::new(1, 2.0, 32).unwrap();
        let e = FftEngine::new(g);
        let mut m = vec![Complex64::new(0.0, 0.0); 32];
        m[3] = Complex64::new(4.0, 0.0);
        let v = e.synthesize(m);
        for (j, z) in v.iter().enumerate() {
            let x = g.coord(j);
            let want = Complex64::new(0.0, g.freq(3) * x).exp();
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn fft_3d_matches_naive_dft() {
        let g = GridSpec { dim: 3, half_extent: 1.0, points: 4 };
        let e = FftEngine::new(g);
        let x: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut y = x.clone();
        e.forward(&mut y);
        let mut a = [0usize; 3];
        let mut b = [0usize; 3];
        for k in 0..64 {
            g.unflatten(k, &mut a);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..64 {
                g.unflatten(j, &mut b);
                let ph: usize = a.iter().zip(&b).map(|(p, q)| p * q).sum();
                acc += x[j] * Complex64::new(0.0, -2.0 * PI * ph as f64 / 4.0).exp();
            }
            assert!((acc - y[k]).norm() < 1e-9);
        }
    }
}
