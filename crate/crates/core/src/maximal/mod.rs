//! Parabolic cubes shaped by a scale function, the dyadic filtration of
//! partitions built from it, and discrete sharp and maximal operators.

mod field;
mod filtration;
mod hl;
mod sharp;
mod verify;

use serde::{Deserialize, Serialize};

use crate::symbols::{geometric_grid, BernsteinSpec};

pub use field::CellField;
pub use filtration::{build_filtration, CellIndex, FiltrationLevel, PartitionFiltration};
pub use hl::{cube_ladder, maximal_function};
pub use sharp::{sharp_function, sharp_levels};
pub use verify::{verify_fs_hl, FsHlConfig, FsHlReport, FsRow, HlRow};

/// Spatial domain: all of `ℝ^d` or the half space `x_1 > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    #[default]
    Full,
    Half,
}

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        0 => 1.0,
        1 => 2.0,
        d => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// `(t0, t0 + φ(c)] × B_c(x0)`, the ball taken inside the domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParabolicCube {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub radius: f64,
    pub height: f64,
    pub domain: Domain,
}

impl ParabolicCube {
    pub fn new(phi: &BernsteinSpec, t0: f64, x0: Vec<f64>, radius: f64, domain: Domain) -> crate::Result<Self> {
        if !(radius > 0.0) || t0 < 0.0 {
            return Err(crate::Error::Domain(format!("cube needs c > 0 and t0 >= 0, got c={radius}, t0={t0}")));
        }
        if domain == Domain::Half && x0.first().is_none_or(|&x| x < 0.0) {
            return Err(crate::Error::Domain("half-space cube anchored outside the half space".into()));
        }
        Ok(Self { t0, x0, radius, height: phi.value(radius)?, domain })
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        if !(t > self.t0 && t <= self.t0 + self.height) {
            return false;
        }
        if self.domain == Domain::Half && x[0] <= 0.0 {
            return false;
        }
        let r2: f64 = x.iter().zip(&self.x0).map(|(a, b)| (a - b) * (a - b)).sum();
        r2 < self.radius * self.radius
    }

    /// `φ(c)|B_c|` for the full-space cube.
    pub fn volume(&self) -> f64 {
        self.height * unit_ball_volume(self.x0.len()) * self.radius.powi(self.x0.len() as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiAssumptionReport {
    pub label: String,
    /// `max φ(2r)/φ(r)` over the sampled range.
    pub c_tilde: f64,
    /// Smallest power of two with `φ(λ₀ r) ≥ 2 φ(r)` on the sampled range.
    pub lambda0: Option<f64>,
    pub positive: bool,
    pub monotone: bool,
    pub pass: bool,
}

const PHI_RANGE: (f64, f64) = (1e-6, 1e6);
const MAX_DOUBLINGS: i32 = 60;

/// Samples the doubling condition and the growth condition over `[1e-6, 1e6]`.
pub fn check_phi_assumptions(phi: &BernsteinSpec) -> PhiAssumptionReport {
    let grid = geometric_grid(PHI_RANGE.0, PHI_RANGE.1, 32);
    let vals: Vec<f64> = grid.iter().map(|&r| phi.value_or_zero(r)).collect();
    let positive = vals.iter().all(|v| v.is_finite() && *v > 0.0);
    let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
    let c_tilde = grid
        .iter()
        .zip(&vals)
        .map(|(&r, &v)| phi.value_or_zero(2.0 * r) / v)
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    let lambda0 = (1..=MAX_DOUBLINGS).map(|k| 2f64.powi(k)).find(|&l| {
        grid.iter().zip(&vals).all(|(&r, &v)| phi.value_or_zero(l * r) >= 2.0 * v * (1.0 - 1e-12))
    });
    PhiAssumptionReport {
        label: phi.label(),
        c_tilde,
        lambda0,
        positive,
        monotone,
        pass: positive && monotone && c_tilde.is_finite() && lambda0.is_some(),
    }
}
