use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::GridSpec;

/// Values on a uniform time mesh `t_k = k T / K`, `k = 0..=K`, times a periodic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    grid: GridSpec,
    t_end: f64,
    steps: usize,
    values: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn new(grid: GridSpec, t_end: f64, steps: usize, values: Vec<Complex64>) -> Result<Self> {
        if steps == 0 || !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::Configuration("need K >= 1 steps and T > 0".into()));
        }
        if values.len() != (steps + 1) * grid.len() {
            return Err(Error::Configuration(format!(
                "expected {} values, got {}",
                (steps + 1) * grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("field values must be finite".into()));
        }
        Ok(Self { grid, t_end, steps, values })
    }

    pub fn zeros(grid: GridSpec, t_end: f64, steps: usize) -> Result<Self> {
        Self::new(grid, t_end, steps, vec![Complex64::new(0.0, 0.0); (steps + 1) * grid.len()])
    }

    /// Samples a real function `f(t, x)`.
    pub fn from_fn<F>(grid: GridSpec, t_end: f64, steps: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> f64 + Sync + Send,
    {
        let n = grid.len();
        let dt = t_end / steps as f64;
        let values = par::map_range((steps + 1) * n, |i| {
            let mut x = [0.0; 3];
            grid.position(i % n, &mut x[..grid.dim]);
            Complex64::new(f((i / n) as f64 * dt, &x[..grid.dim]), 0.0)
        });
        Self::new(grid, t_end, steps, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn level(&self, k: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_im(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_compatible(&self, other: &SpaceTimeField) -> bool {
        self.grid == other.grid && self.steps == other.steps && self.t_end == other.t_end
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SpaceTimeField, b: f64) -> Result<SpaceTimeField> {
        if !self.is_compatible(other) {
            return Err(Error::Configuration("fields live on different meshes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * a + y * b).collect();
        Ok(SpaceTimeField { values, ..self.clone() })
    }

    pub fn scaled(&self, a: f64) -> SpaceTimeField {
        SpaceTimeField { values: self.values.iter().map(|v| v * a).collect(), ..self.clone() }
    }

    /// Trapezoid weights in time.
    pub fn time_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps).map(|k| if k == 0 || k == self.steps { 0.5 * dt } else { dt }).collect()
    }

    /// `(Σ_k w_k Σ_j |u|^p h^d)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let n = self.grid.len();
        let w = self.time_weights();
        let hd = self.grid.cell_volume();
        let s = par::sum_by(self.values.len(), |i| w[i / n] * self.values[i].norm().powf(p));
        (s * hd).powf(1.0 / p)
    }

    /// Space-time bilinear pairing `Σ_k w_k Σ_j a b h^d`.
    pub fn pairing(&self, other: &SpaceTimeField) -> Result<Complex64> {
        if !self.is_compatible(other) {
            return Err(Error::Configuration("fields live on different meshes".into()));
        }
        let n = self.grid.len();
        let w = self.time_weights();
        let hd = self.grid.cell_volume();
        let re = par::sum_by(self.values.len(), |i| w[i / n] * (self.values[i] * other.values[i]).re);
        let im = par::sum_by(self.values.len(), |i| w[i / n] * (self.values[i] * other.values[i]).im);
        Ok(Complex64::new(re, im) * hd)
    }
}
