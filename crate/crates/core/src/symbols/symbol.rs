use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bernstein::BernsteinSpec;
use super::piecewise::PiecewiseConstant;
use crate::error::{Error, Result};

/// The part of the exponent generated by the "principal" process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SmoothPart {
    /// `-φ(σ(t)²|ξ|²)`: Brownian motion subordinated by independent pieces.
    SbmModulated { phi: BernsteinSpec, sigma: PiecewiseConstant },
    /// `-a(t) φ(|ξ|²)`: Brownian motion run on an additive clock.
    AdditiveClock { phi: BernsteinSpec, clock: PiecewiseConstant },
    /// `-a(t) Σ|ξᵢ|^α`: independent one-dimensional stable coordinates.
    Anisotropic { alpha: f64, clock: PiecewiseConstant },
}

/// An independent process added on top of the principal one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SecondPart {
    /// Deterministic motion `∫ b(r) dr · direction`.
    Drift { direction: Vec<f64>, speed: PiecewiseConstant },
    /// Compound Poisson with jumps uniform on `[-w, w]^d`.
    CompoundPoisson { rate: f64, half_width: f64 },
}

pub type SymbolFn = Arc<dyn Fn(f64, &[f64]) -> Complex64 + Send + Sync>;

/// A user-supplied exponent `Ψ(t, ξ)`; time integrals use adaptive quadrature.
#[derive(Clone)]
pub struct CustomSymbol {
    pub f: SymbolFn,
    /// Times where `Ψ` may jump in `t`; quadrature splits there.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for CustomSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSymbol").field("breakpoints", &self.breakpoints).finish()
    }
}

#[derive(Clone, Debug)]
enum Core {
    Closed(SmoothPart),
    Custom(CustomSymbol),
}

/// Exponent `Ψ(t, ξ)` of a process with independent increments:
/// `E exp(iξ·(X_t - X_s)) = exp(∫_s^t Ψ(r, ξ) dr)`.
#[derive(Clone, Debug)]
pub struct SymbolSpec {
    dim: usize,
    core: Core,
    second: Option<SecondPart>,
    reference: BernsteinSpec,
    id: String,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_nonneg(p: &PiecewiseConstant, what: &str) -> Result<()> {
    if p.values().iter().any(|v| *v < 0.0) {
        return Err(Error::Domain(format!("{what} must be nonnegative")));
    }
    Ok(())
}

impl SymbolSpec {
    pub fn sbm(dim: usize, phi: BernsteinSpec, sigma: PiecewiseConstant) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            reference: phi.clone(),
            core: Core::Closed(SmoothPart::SbmModulated { phi, sigma }),
            second: None,
            id: "sbm".into(),
        })
    }

    pub fn clock(dim: usize, phi: BernsteinSpec, clock: PiecewiseConstant) -> Result<Self> {
        check_dim(dim)?;
        check_nonneg(&clock, "clock rate")?;
        Ok(Self {
            dim,
            reference: phi.clone(),
            core: Core::Closed(SmoothPart::AdditiveClock { phi, clock }),
            second: None,
            id: "clock".into(),
        })
    }

    pub fn anisotropic(dim: usize, alpha: f64, clock: PiecewiseConstant) -> Result<Self> {
        check_dim(dim)?;
        check_nonneg(&clock, "clock rate")?;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("anisotropic exponent {alpha} not in (0,2]")));
        }
        Ok(Self {
            dim,
            reference: BernsteinSpec::power(alpha / 2.0)?,
            core: Core::Closed(SmoothPart::Anisotropic { alpha, clock }),
            second: None,
            id: "anisotropic".into(),
        })
    }

    /// Exponent given as a closure; `reference` is the scale function it is
    /// compared against.
    pub fn custom(dim: usize, f: SymbolFn, reference: BernsteinSpec, breakpoints: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, core: Core::Custom(CustomSymbol { f, breakpoints }), second: None, reference, id: "custom".into() })
    }

    pub fn with_second(mut self, second: SecondPart) -> Result<Self> {
        match &second {
            SecondPart::Drift { direction, .. } => {
                if direction.len() != self.dim {
                    return Err(Error::Configuration(format!(
                        "drift direction has length {}, symbol dimension is {}",
                        direction.len(),
                        self.dim
                    )));
                }
            }
            SecondPart::CompoundPoisson { rate, half_width } => {
                if !(*rate >= 0.0 && *half_width > 0.0 && rate.is_finite() && half_width.is_finite()) {
                    return Err(Error::Domain("compound Poisson needs rate >= 0 and width > 0".into()));
                }
            }
        }
        self.second = Some(second);
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The scale function the symbol is measured against.
    pub fn reference(&self) -> &BernsteinSpec {
        &self.reference
    }

    pub fn smooth(&self) -> Option<&SmoothPart> {
        match &self.core {
            Core::Closed(s) => Some(s),
            Core::Custom(_) => None,
        }
    }

    pub fn second(&self) -> Option<&SecondPart> {
        self.second.as_ref()
    }

    /// The symbol with its second component removed.
    pub fn principal(&self) -> SymbolSpec {
        let mut s = self.clone();
        s.second = None;
        s
    }

    /// Whether `Φ` is computed in closed form.
    pub fn is_exact(&self) -> bool {
        matches!(self.core, Core::Closed(_))
    }

    /// Whether `Ψ(t, -ξ) = Ψ(t, ξ)` (real symbols).
    pub fn is_real(&self) -> bool {
        !matches!(self.second, Some(SecondPart::Drift { .. })) && self.is_exact()
    }

    /// `Ψ(t, ξ)`.
    pub fn eval(&self, t: f64, xi: &[f64]) -> Complex64 {
        debug_assert_eq!(xi.len(), self.dim);
        let base = match &self.core {
            Core::Closed(p) => Complex64::new(smooth_rate(p, t, xi), 0.0),
            Core::Custom(c) => (c.f)(t, xi),
        };
        match &self.second {
            None => base,
            Some(s) => base + second_rate(s, t, xi),
        }
    }

    /// `Φ(s, t, ξ) = ∫_s^t Ψ(r, ξ) dr`.
    pub fn accumulate(&self, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
        if s > t {
            return Err(Error::Ordering { s, t });
        }
        if xi.len() != self.dim {
            return Err(Error::Configuration(format!("frequency has length {}, expected {}", xi.len(), self.dim)));
        }
        let base = match &self.core {
            Core::Closed(p) => Complex64::new(smooth_integral(p, s, t, xi), 0.0),
            Core::Custom(c) => integrate_custom(c, s, t, xi)?,
        };
        Ok(match &self.second {
            None => base,
            Some(sec) => base + second_integral(sec, s, t, xi),
        })
    }

    /// `Φ` without argument checks; used inside hot loops after validation.
    pub(crate) fn accumulate_unchecked(&self, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
        match (&self.core, &self.second) {
            (Core::Closed(p), None) => Ok(Complex64::new(smooth_integral(p, s, t, xi), 0.0)),
            _ => self.accumulate(s, t, xi),
        }
    }

    /// Times in `(s, t)` where `Ψ` jumps.
    pub fn breakpoints(&self, s: f64, t: f64) -> Vec<f64> {
        let mut out: Vec<f64> = match &self.core {
            Core::Closed(SmoothPart::SbmModulated { sigma: p, .. })
            | Core::Closed(SmoothPart::AdditiveClock { clock: p, .. })
            | Core::Closed(SmoothPart::Anisotropic { clock: p, .. }) => p.starts().to_vec(),
            Core::Custom(c) => c.breakpoints.clone(),
        };
        if let Some(SecondPart::Drift { speed, .. }) = &self.second {
            out.extend_from_slice(speed.starts());
        }
        out.retain(|&x| x > s && x < t);
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }
}

fn norm_sq(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum()
}

fn smooth_rate(p: &SmoothPart, t: f64, xi: &[f64]) -> f64 {
    match p {
        SmoothPart::SbmModulated { phi, sigma } => {
            let s = sigma.value_at(t);
            -phi.value_or_zero(s * s * norm_sq(xi))
        }
        SmoothPart::AdditiveClock { phi, clock } => -clock.value_at(t) * phi.value_or_zero(norm_sq(xi)),
        SmoothPart::Anisotropic { alpha, clock } => {
            -clock.value_at(t) * xi.iter().map(|x| x.abs().powf(*alpha)).sum::<f64>()
        }
    }
}

fn smooth_integral(p: &SmoothPart, s: f64, t: f64, xi: &[f64]) -> f64 {
    match p {
        SmoothPart::SbmModulated { phi, sigma } => {
            let l = norm_sq(xi);
            -sigma.integral_of(s, t, |v| phi.value_or_zero(v * v * l))
        }
        SmoothPart::AdditiveClock { phi, clock } => -clock.integral(s, t) * phi.value_or_zero(norm_sq(xi)),
        SmoothPart::Anisotropic { alpha, clock } => {
            -clock.integral(s, t) * xi.iter().map(|x| x.abs().powf(*alpha)).sum::<f64>()
        }
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn second_rate(p: &SecondPart, t: f64, xi: &[f64]) -> Complex64 {
    match p {
        SecondPart::Drift { direction, speed } => {
            let dot: f64 = direction.iter().zip(xi).map(|(a, b)| a * b).sum();
            Complex64::new(0.0, speed.value_at(t) * dot)
        }
        SecondPart::CompoundPoisson { rate, half_width } => {
            let cf: f64 = xi.iter().map(|x| sinc(x * half_width)).product();
            Complex64::new(rate * (cf - 1.0), 0.0)
        }
    }
}

fn second_integral(p: &SecondPart, s: f64, t: f64, xi: &[f64]) -> Complex64 {
    match p {
        SecondPart::Drift { direction, speed } => {
            let dot: f64 = direction.iter().zip(xi).map(|(a, b)| a * b).sum();
            Complex64::new(0.0, speed.integral(s, t) * dot)
        }
        SecondPart::CompoundPoisson { .. } => second_rate(p, s, xi) * (t - s),
    }
}

const QUAD_TOL: f64 = 1e-10;
const QUAD_DEPTH: u32 = 40;

fn integrate_custom(c: &CustomSymbol, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
    if t == s {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut cuts = vec![s];
    let mut bp: Vec<f64> = c.breakpoints.iter().cloned().filter(|&b| b > s && b < t).collect();
    bp.sort_by(|a, b| a.total_cmp(b));
    cuts.extend(bp);
    cuts.push(t);
    let f = |r: f64| (c.f)(r, xi);
    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], QUAD_TOL)?;
    }
    Ok(total)
}

/// Adaptive Simpson quadrature to relative tolerance `tol`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    // coarse pass fixes the absolute scale for the relative tolerance
    let n = 8;
    let h = (b - a) / n as f64;
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut pieces = Vec::with_capacity(n);
    for k in 0..n {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let w = (f0 + fm * 4.0 + f1) * (h / 6.0);
        coarse += w;
        pieces.push((x0, x1, f0, fm, f1, w));
    }
    let eps = tol * coarse.norm().max(1e-300) / n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for (x0, x1, f0, fm, f1, w) in pieces {
        total += simpson_rec(f, x0, x1, f0, fm, f1, w, eps, QUAD_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    eps: f64,
    depth: u32,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Accuracy(format!("adaptive quadrature did not converge on [{a}, {b}]")));
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)?)
}
