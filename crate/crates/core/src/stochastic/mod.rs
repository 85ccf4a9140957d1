//! Samplers for the example processes, characteristic-function checks, and the
//! Monte Carlo form of the solution.

mod cf;
mod mc;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

pub use cf::{empirical_cf, verify_cf, CfReport, CfRow};
pub use mc::{interpolate, mc_solution, shift_field, McResult};

use crate::error::{Error, Result};
use crate::symbols::{BernsteinKind, PiecewiseConstant, SecondPart, SmoothPart, SymbolSpec};

/// The principal process, driven by an `α`-stable subordinator (`α = 1` is Brownian motion).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PrincipalProcess {
    /// `∫ σ(r) dY_r` with `Y` subordinate Brownian motion.
    SbmModulated { alpha: f64, sigma: PiecewiseConstant },
    /// Subordinate Brownian motion run on the clock `∫ a`.
    AdditiveClock { alpha: f64, clock: PiecewiseConstant },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub dim: usize,
    pub principal: PrincipalProcess,
    pub second: Option<SecondPart>,
}

impl ProcessSpec {
    pub fn new(dim: usize, principal: PrincipalProcess, second: Option<SecondPart>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let (alpha, p) = match &principal {
            PrincipalProcess::SbmModulated { alpha, sigma } => (*alpha, sigma),
            PrincipalProcess::AdditiveClock { alpha, clock } => (*alpha, clock),
        };
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("stable index {alpha} not in (0,1]")));
        }
        if p.values().iter().any(|v| *v < 0.0) {
            return Err(Error::Domain("modulation must be nonnegative".into()));
        }
        match &second {
            Some(SecondPart::Drift { direction, .. }) if direction.len() != dim => {
                return Err(Error::Configuration("drift direction has the wrong dimension".into()))
            }
            Some(SecondPart::CompoundPoisson { rate, half_width }) if !(*rate >= 0.0 && *half_width > 0.0) => {
                return Err(Error::Domain("compound Poisson needs rate >= 0 and width > 0".into()))
            }
            _ => {}
        }
        Ok(Self { dim, principal, second })
    }

    /// The process whose exponent is `sym`, when a sampler exists for it.
    pub fn from_symbol(sym: &SymbolSpec) -> Result<Self> {
        let alpha_of = |phi: &crate::symbols::BernsteinSpec| match phi.kind() {
            BernsteinKind::Stable { alpha } => Ok(*alpha),
            BernsteinKind::Linear => Ok(1.0),
            _ => Err(Error::Configuration(format!("no sampler for scale function {}", phi.label()))),
        };
        let principal = match sym.smooth() {
            Some(SmoothPart::SbmModulated { phi, sigma }) => {
                PrincipalProcess::SbmModulated { alpha: alpha_of(phi)?, sigma: sigma.clone() }
            }
            Some(SmoothPart::AdditiveClock { phi, clock }) => {
                PrincipalProcess::AdditiveClock { alpha: alpha_of(phi)?, clock: clock.clone() }
            }
            _ => return Err(Error::Configuration(format!("no sampler for symbol {}", sym.id()))),
        };
        Self::new(sym.dim(), principal, sym.second().cloned())
    }

    /// The principal part alone.
    pub fn principal_only(&self) -> ProcessSpec {
        ProcessSpec { second: None, ..self.clone() }
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One increment over `dt` of the subordinator with Laplace exponent `λ^α`.
pub fn sample_stable_subordinator<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    if alpha >= 1.0 {
        return dt;
    }
    let u = open01(rng) * PI;
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    dt.powf(1.0 / alpha) * a * b
}

fn add_gaussian<R: Rng + ?Sized>(out: &mut [f64], scale: f64, rng: &mut R) {
    for o in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *o += scale * z;
    }
}

/// Adds the principal increment over `[s, t]` to `out`.
pub fn sample_principal<R: Rng + ?Sized>(spec: &ProcessSpec, s: f64, t: f64, out: &mut [f64], rng: &mut R) {
    match &spec.principal {
        PrincipalProcess::SbmModulated { alpha, sigma } => {
            for (len, v) in sigma.segments(s, t) {
                if v == 0.0 {
                    continue;
                }
                let sub = sample_stable_subordinator(*alpha, len, rng);
                add_gaussian(out, v * (2.0 * sub).sqrt(), rng);
            }
        }
        PrincipalProcess::AdditiveClock { alpha, clock } => {
            let c = clock.integral(s, t);
            if c > 0.0 {
                let sub = sample_stable_subordinator(*alpha, c, rng);
                add_gaussian(out, (2.0 * sub).sqrt(), rng);
            }
        }
    }
}

/// Adds the second-component increment over `[s, t]` to `out`.
pub fn sample_second<R: Rng + ?Sized>(spec: &ProcessSpec, s: f64, t: f64, out: &mut [f64], rng: &mut R) {
    match &spec.second {
        None => {}
        Some(SecondPart::Drift { direction, speed }) => {
            let b = speed.integral(s, t);
            for (o, d) in out.iter_mut().zip(direction) {
                *o += b * d;
            }
        }
        Some(SecondPart::CompoundPoisson { rate, half_width }) => {
            let mean = rate * (t - s);
            if mean <= 0.0 {
                return;
            }
            let n = Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(0.0) as usize;
            for _ in 0..n {
                for o in out.iter_mut() {
                    *o += rng.random_range(-half_width..=*half_width);
                }
            }
        }
    }
}

/// `X_t - X_s`, principal part from `rng1` and second part from `rng2`.
pub fn sample_increment<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    s: f64,
    t: f64,
    rng1: &mut R,
    rng2: &mut R,
) -> Result<Vec<f64>> {
    if s > t {
        return Err(Error::Ordering { s, t });
    }
    let mut out = vec![0.0; spec.dim];
    sample_principal(spec, s, t, &mut out, rng1);
    sample_second(spec, s, t, &mut out, rng2);
    Ok(out)
}

/// Independent streams for path `index`: `2i` for the principal part, `2i+1` for the second.
pub fn path_rngs(seed: u64, index: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut a = ChaCha8Rng::seed_from_u64(seed);
    a.set_stream(2 * index);
    let mut b = ChaCha8Rng::seed_from_u64(seed);
    b.set_stream(2 * index + 1);
    (a, b)
}

/// Positions `X_{τ_k}` of one path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub seed: u64,
    pub index: u64,
}

impl PathSample {
    pub fn increment(&self, j: usize, k: usize) -> Vec<f64> {
        self.positions[k].iter().zip(&self.positions[j]).map(|(a, b)| a - b).collect()
    }
}

/// A path on `times` (which must start at 0 and increase). Modulation knots
/// between mesh points are handled inside each step.
pub fn sample_path(spec: &ProcessSpec, times: &[f64], seed: u64, index: u64) -> Result<PathSample> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Configuration("path times must start at 0 and increase".into()));
    }
    let (mut r1, mut r2) = path_rngs(seed, index);
    let mut pos = vec![0.0; spec.dim];
    let mut positions = vec![pos.clone()];
    for w in times.windows(2) {
        let inc = sample_increment(spec, w[0], w[1], &mut r1, &mut r2)?;
        for (p, d) in pos.iter_mut().zip(inc) {
            *p += d;
        }
        positions.push(pos.clone());
    }
    Ok(PathSample { times: times.to_vec(), positions, seed, index })
}
