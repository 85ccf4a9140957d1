use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_multiplier, Multiplier, SpaceTimeField};
use crate::error::{Error, Result};
use crate::symbols::SymbolSpec;

/// `ζ(t,x) = b((t-t₀)/w_t) Π b((xᵢ-x₀ᵢ)/w_x)` with `b(s) = exp(-1/(1-s²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpTest {
    pub t_center: f64,
    pub t_width: f64,
    pub x_center: Vec<f64>,
    pub x_width: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_prime(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        bump(s) * (-2.0 * s / (q * q))
    }
}

impl BumpTest {
    fn spatial(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.x_center).map(|(a, c)| bump((a - c) / self.x_width)).product()
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        bump((t - self.t_center) / self.t_width) * self.spatial(x)
    }

    pub fn time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        bump_prime((t - self.t_center) / self.t_width) / self.t_width * self.spatial(x)
    }
}

/// Three scales times five seeded centres, all supported inside `(0,T) × box`.
pub fn bump_family(dim: usize, half_extent: f64, t_end: f64, seed: u64) -> Vec<BumpTest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &(ft, fx) in &[(0.25, 0.25), (0.15, 0.125), (0.1, 0.0625)] {
        let tw = ft * t_end;
        let xw = fx * half_extent;
        for _ in 0..5 {
            let tc = rng.random_range(tw..t_end - tw);
            let xc = (0..dim).map(|_| rng.random_range(-half_extent + xw..half_extent - xw)).collect();
            out.push(BumpTest { t_center: tc, t_width: tw, x_center: xc, x_width: xw });
        }
    }
    out
}

/// `max_ζ |-⟨u,ζ_t⟩ - ⟨u,A*ζ⟩ - ⟨f,ζ⟩| / (‖ζ‖ (‖u‖ + ‖f‖))` with `L₂` norms.
pub fn weak_residual(
    u: &SpaceTimeField,
    f: &SpaceTimeField,
    sym: &SymbolSpec,
    tests: &[BumpTest],
) -> Result<f64> {
    if !u.is_compatible(f) {
        return Err(Error::Configuration("solution and source live on different meshes".into()));
    }
    let scale = u.lp_norm(2.0) + f.lp_norm(2.0);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let g = *u.grid();
    let mut worst = 0.0f64;
    for z in tests {
        let zeta = SpaceTimeField::from_fn(g, u.t_end(), u.steps(), |t, x| z.value(t, x))?;
        let zeta_t = SpaceTimeField::from_fn(g, u.t_end(), u.steps(), |t, x| z.time_derivative(t, x))?;
        let adj = apply_multiplier(&zeta, Multiplier::AdjointSymbol(sym))?;
        let r: Complex64 = -u.pairing(&zeta_t)? - u.pairing(&adj)? - f.pairing(&zeta)?;
        let nz = zeta.lp_norm(2.0);
        if nz > 0.0 {
            worst = worst.max(r.norm() / (nz * scale));
        }
    }
    Ok(worst)
}
