use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-constant field on a uniform time × space cell grid.
///
/// Cell `(j, i_1..i_d)` is `(t0 + j dt, t0 + (j+1) dt] × Π (x0_k + i_k h, x0_k + (i_k+1) h]`.
/// Values are stored time-major with the last spatial axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellField {
    pub dim: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub x0: Vec<f64>,
    pub h: f64,
    pub ns: usize,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(t0: f64, dt: f64, nt: usize, x0: Vec<f64>, h: f64, ns: usize, values: Vec<f64>) -> Result<Self> {
        let dim = x0.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Configuration(format!("dimension {dim} not in 1..=3")));
        }
        if !(dt > 0.0 && h > 0.0) || nt == 0 || ns == 0 {
            return Err(Error::Configuration("cell field needs positive steps and counts".into()));
        }
        let len = nt * ns.pow(dim as u32);
        if values.len() != len {
            return Err(Error::Configuration(format!("expected {len} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("cell field values must be finite".into()));
        }
        Ok(Self { dim, t0, dt, nt, x0, h, ns, values })
    }

    pub fn zeros(t0: f64, dt: f64, nt: usize, x0: Vec<f64>, h: f64, ns: usize) -> Result<Self> {
        let len = nt * ns.pow(x0.len() as u32);
        Self::new(t0, dt, nt, x0, h, ns, vec![0.0; len])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn<F: Fn(f64, &[f64]) -> f64>(t0: f64, dt: f64, nt: usize, x0: Vec<f64>, h: f64, ns: usize, f: F) -> Result<Self> {
        let mut out = Self::zeros(t0, dt, nt, x0, h, ns)?;
        let mut x = vec![0.0; out.dim];
        for k in 0..out.values.len() {
            let (j, idx) = out.unflatten(k);
            let t = out.t0 + (j as f64 + 0.5) * out.dt;
            for (a, i) in idx.iter().enumerate() {
                x[a] = out.x0[a] + (*i as f64 + 0.5) * out.h;
            }
            out.values[k] = f(t, &x);
        }
        Ok(out)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spatial_len(&self) -> usize {
        self.ns.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dt * self.h.powi(self.dim as i32)
    }

    pub fn unflatten(&self, k: usize) -> (usize, Vec<usize>) {
        let sl = self.spatial_len();
        let (j, mut r) = (k / sl, k % sl);
        let mut idx = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            idx[a] = r % self.ns;
            r /= self.ns;
        }
        (j, idx)
    }

    pub fn flatten(&self, j: usize, idx: &[usize]) -> usize {
        idx.iter().fold(j, |acc, &i| acc * self.ns + i)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.nt == other.nt
            && self.ns == other.ns
            && self.t0 == other.t0
            && self.dt == other.dt
            && self.h == other.h
            && self.x0 == other.x0
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.t0, self.dt, self.nt, self.x0.clone(), self.h, self.ns, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// `(Σ |v|^p vol)^{1/p}` over the grid.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: Vec<f64> = self.values.iter().map(|v| v.abs().powf(p)).collect();
        (crate::par::pairwise_sum(&s) * self.cell_volume()).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}
