use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form families of scale functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernsteinKind {
    /// `λ^α`
    Stable { alpha: f64 },
    /// `λ^β + λ^α` with `β ≤ α`
    SumStable { beta: f64, alpha: f64 },
    /// `λ^α log(1+λ)^β`
    LogPlus { alpha: f64, beta: f64 },
    /// `λ^α log(1+λ)^{-β}`
    LogMinus { alpha: f64, beta: f64 },
    /// `(λ + m^{1/α})^α - m`
    Relativistic { alpha: f64, m: f64 },
    /// `λ`
    Linear,
    /// `λ / log(1 + λ^{β/2})`
    LogRatio { beta: f64 },
    /// `λ^p` for any `p > 0`; not a Bernstein function once `p > 1`.
    Power { exponent: f64 },
    /// Log-log linear interpolation of positive samples.
    Tabulated { lambdas: Vec<f64>, values: Vec<f64> },
}

/// Declared weak-scaling data: `N_lo (R/r)^lower ≤ φ(R)/φ(r) ≤ N_hi (R/r)^upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub lower: f64,
    pub upper: f64,
    pub n_lower: f64,
    pub n_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BernsteinKind", into = "BernsteinKind")]
pub struct BernsteinSpec {
    kind: BernsteinKind,
    scaling: Scaling,
}

impl TryFrom<BernsteinKind> for BernsteinSpec {
    type Error = Error;
    fn try_from(kind: BernsteinKind) -> Result<Self> {
        BernsteinSpec::new(kind)
    }
}

impl From<BernsteinSpec> for BernsteinKind {
    fn from(s: BernsteinSpec) -> Self {
        s.kind
    }
}

fn unit_open(x: f64) -> bool {
    x.is_finite() && x > 0.0 && x < 1.0
}

fn unit_half_open(x: f64) -> bool {
    x.is_finite() && x > 0.0 && x <= 1.0
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

impl BernsteinSpec {
    pub fn new(kind: BernsteinKind) -> Result<Self> {
        use BernsteinKind::*;
        let sc = |lower: f64, upper: f64| Scaling { lower, upper, n_lower: 1.0, n_upper: 1.0 };
        let scaling = match &kind {
            Stable { alpha } => {
                if !unit_half_open(*alpha) {
                    return Err(bad(format!("stable exponent {alpha} not in (0,1]")));
                }
                sc(*alpha, *alpha)
            }
            SumStable { beta, alpha } => {
                if !unit_half_open(*alpha) || !unit_half_open(*beta) || beta > alpha {
                    return Err(bad(format!("need 0 < beta <= alpha <= 1, got beta={beta}, alpha={alpha}")));
                }
                sc(*beta, *alpha)
            }
            LogPlus { alpha, beta } => {
                if !unit_open(*alpha) || !(beta.is_finite() && *beta > 0.0 && alpha + beta <= 1.0) {
                    return Err(bad(format!("need alpha in (0,1), beta in (0,1-alpha], got {alpha}, {beta}")));
                }
                sc(*alpha, alpha + beta)
            }
            LogMinus { alpha, beta } => {
                if !unit_half_open(*alpha) || !(beta.is_finite() && *beta > 0.0 && beta < alpha) {
                    return Err(bad(format!("need alpha in (0,1], beta in (0,alpha), got {alpha}, {beta}")));
                }
                sc(alpha - beta, *alpha)
            }
            Relativistic { alpha, m } => {
                if !unit_open(*alpha) || !(m.is_finite() && *m > 0.0) {
                    return Err(bad(format!("need alpha in (0,1), m > 0, got {alpha}, {m}")));
                }
                sc(*alpha, 1.0)
            }
            Linear => sc(1.0, 1.0),
            LogRatio { beta } => {
                if !(beta.is_finite() && *beta > 0.0 && *beta < 2.0) {
                    return Err(bad(format!("need beta in (0,2), got {beta}")));
                }
                sc(1.0 - beta / 2.0, 1.0)
            }
            Power { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(bad(format!("power exponent must be positive, got {exponent}")));
                }
                sc(*exponent, *exponent)
            }
            Tabulated { lambdas, values } => {
                if lambdas.len() < 2 || lambdas.len() != values.len() {
                    return Err(bad("tabulated scale function needs >= 2 matching samples"));
                }
                if lambdas.iter().chain(values.iter()).any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(bad("tabulated samples must be positive and finite"));
                }
                if lambdas.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(bad("tabulated abscissae must be strictly increasing"));
                }
                let slopes = lambdas
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(l, v)| (v[1] / v[0]).ln() / (l[1] / l[0]).ln());
                let (lo, hi) = slopes.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s), b.max(s)));
                sc(lo, hi)
            }
        };
        Ok(Self { kind, scaling })
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(BernsteinKind::Stable { alpha })
    }

    pub fn linear() -> Self {
        Self::new(BernsteinKind::Linear).expect("linear is always valid")
    }

    pub fn power(exponent: f64) -> Result<Self> {
        Self::new(BernsteinKind::Power { exponent })
    }

    pub fn kind(&self) -> &BernsteinKind {
        &self.kind
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    /// Overrides the declared scaling constants.
    pub fn with_scaling(mut self, scaling: Scaling) -> Result<Self> {
        if !(scaling.lower > 0.0 && scaling.lower <= scaling.upper && scaling.n_lower > 0.0 && scaling.n_upper > 0.0) {
            return Err(bad("invalid scaling declaration"));
        }
        self.scaling = scaling;
        Ok(self)
    }

    /// Whether the function is a genuine Bernstein function (and so admits a subordinator).
    pub fn is_bernstein(&self) -> bool {
        match &self.kind {
            BernsteinKind::Power { exponent } => *exponent <= 1.0,
            BernsteinKind::Tabulated { .. } => false,
            _ => true,
        }
    }

    /// Short label used in reports and file names.
    pub fn label(&self) -> String {
        use BernsteinKind::*;
        match &self.kind {
            Stable { alpha } => format!("stable({alpha})"),
            SumStable { beta, alpha } => format!("sum_stable({beta},{alpha})"),
            LogPlus { alpha, beta } => format!("log_plus({alpha},{beta})"),
            LogMinus { alpha, beta } => format!("log_minus({alpha},{beta})"),
            Relativistic { alpha, m } => format!("relativistic({alpha},{m})"),
            Linear => "linear".into(),
            LogRatio { beta } => format!("log_ratio({beta})"),
            Power { exponent } => format!("power({exponent})"),
            Tabulated { lambdas, .. } => format!("tabulated({})", lambdas.len()),
        }
    }

    /// `φ(λ)` for `λ > 0`.
    pub fn value(&self, lambda: f64) -> Result<f64> {
        check_arg(lambda)?;
        Ok(self.raw(lambda))
    }

    /// `φ(λ)` extended by `φ(0) = 0`; no argument checks.
    pub fn value_or_zero(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            0.0
        } else {
            self.raw(lambda)
        }
    }

    pub(crate) fn raw(&self, l: f64) -> f64 {
        use BernsteinKind::*;
        match &self.kind {
            Stable { alpha } => l.powf(*alpha),
            SumStable { beta, alpha } => l.powf(*beta) + l.powf(*alpha),
            LogPlus { alpha, beta } => l.powf(*alpha) * l.ln_1p().powf(*beta),
            LogMinus { alpha, beta } => l.powf(*alpha) * l.ln_1p().powf(-beta),
            Relativistic { alpha, m } => {
                let c = m.powf(1.0 / alpha);
                // (l + c)^α - c^α, rewritten to avoid cancellation for small l
                let r = l / c;
                m * (alpha * r.ln_1p()).exp_m1()
            }
            Linear => l,
            LogRatio { beta } => l / l.powf(beta / 2.0).ln_1p(),
            Power { exponent } => l.powf(*exponent),
            Tabulated { lambdas, values } => tab_interp(lambdas, values, l),
        }
    }

    /// `dⁿφ/dλⁿ` for `n ≤ 2`.
    pub(crate) fn raw_derivative(&self, n: usize, l: f64) -> f64 {
        use BernsteinKind::*;
        if n == 0 {
            return self.raw(l);
        }
        let pw = |a: f64| -> f64 {
            match n {
                1 => a * l.powf(a - 1.0),
                _ => a * (a - 1.0) * l.powf(a - 2.0),
            }
        };
        match &self.kind {
            Stable { alpha } => pw(*alpha),
            Power { exponent } => pw(*exponent),
            SumStable { beta, alpha } => pw(*beta) + pw(*alpha),
            Linear => {
                if n == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            LogPlus { alpha, beta } => log_product(*alpha, *beta, n, l),
            LogMinus { alpha, beta } => log_product(*alpha, -beta, n, l),
            Relativistic { alpha, m } => {
                let x = l + m.powf(1.0 / alpha);
                match n {
                    1 => alpha * x.powf(alpha - 1.0),
                    _ => alpha * (alpha - 1.0) * x.powf(alpha - 2.0),
                }
            }
            LogRatio { beta } => {
                let g = beta / 2.0;
                let w = l.powf(g);
                let gl = w.ln_1p();
                let g1 = g * w / (l * (1.0 + w));
                if n == 1 {
                    return 1.0 / gl - l * g1 / (gl * gl);
                }
                let g2 = g / (l * l) * (g * w / ((1.0 + w) * (1.0 + w)) - w / (1.0 + w));
                -2.0 * g1 / (gl * gl) - l * g2 / (gl * gl) + 2.0 * l * g1 * g1 / (gl * gl * gl)
            }
            Tabulated { .. } => {
                let h = l * 1e-5;
                match n {
                    1 => (self.raw(l + h) - self.raw(l - h)) / (2.0 * h),
                    _ => (self.raw(l + h) - 2.0 * self.raw(l) + self.raw(l - h)) / (h * h),
                }
            }
        }
    }

    /// Generalized inverse `inf { λ > 0 : φ(λ) ≥ t }`.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Domain(format!("inverse needs t > 0, got {t}")));
        }
        use BernsteinKind::*;
        match &self.kind {
            Stable { alpha } => Ok(t.powf(1.0 / alpha)),
            Power { exponent } => Ok(t.powf(1.0 / exponent)),
            Linear => Ok(t),
            Relativistic { alpha, m } => {
                let c = m.powf(1.0 / alpha);
                // (t+m)^{1/α} - c, written as c((1+t/m)^{1/α} - 1)
                Ok(c * ((t / m).ln_1p() / alpha).exp_m1())
            }
            Tabulated { values, .. } => {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if t < lo || t > hi {
                    return Err(Error::Range(format!("t = {t} outside tabulated range [{lo}, {hi}]")));
                }
                self.bisect_inverse(t)
            }
            _ => self.bisect_inverse(t),
        }
    }

    fn bisect_inverse(&self, t: f64) -> Result<f64> {
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        let mut guard = 0;
        while self.raw(lo) >= t {
            lo *= 0.5;
            guard += 1;
            if guard > 3000 || lo == 0.0 {
                return Err(Error::Range(format!("no λ > 0 with φ(λ) < {t}")));
            }
        }
        guard = 0;
        while self.raw(hi) < t {
            hi *= 2.0;
            guard += 1;
            if guard > 3000 || !hi.is_finite() {
                return Err(Error::Range(format!("φ stays below {t}")));
            }
        }
        while (hi - lo) > 1e-10 * hi {
            let mid = (lo * hi).sqrt();
            let mid = if mid <= lo || mid >= hi { 0.5 * (lo + hi) } else { mid };
            if self.raw(mid) >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

fn check_arg(l: f64) -> Result<()> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::Domain(format!("scale function argument must be positive and finite, got {l}")));
    }
    Ok(())
}

fn log_product(alpha: f64, beta: f64, n: usize, l: f64) -> f64 {
    let u0 = l.powf(alpha);
    let u1 = alpha * l.powf(alpha - 1.0);
    let lg = l.ln_1p();
    let lg1 = 1.0 / (1.0 + l);
    let v0 = lg.powf(beta);
    let v1 = beta * lg.powf(beta - 1.0) * lg1;
    if n == 1 {
        return u1 * v0 + u0 * v1;
    }
    let u2 = alpha * (alpha - 1.0) * l.powf(alpha - 2.0);
    let lg2 = -lg1 * lg1;
    let v2 = beta * (beta - 1.0) * lg.powf(beta - 2.0) * lg1 * lg1 + beta * lg.powf(beta - 1.0) * lg2;
    u2 * v0 + 2.0 * u1 * v1 + u0 * v2
}

fn tab_interp(ls: &[f64], vs: &[f64], l: f64) -> f64 {
    let n = ls.len();
    let i = match ls.partition_point(|&x| x <= l) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let (l0, l1, v0, v1) = (ls[i], ls[i + 1], vs[i], vs[i + 1]);
    let s = (v1 / v0).ln() / (l1 / l0).ln();
    v0 * (l / l0).powf(s)
}

/// Highest derivative order of φ needed in dimension `d`: `⌊d/2⌋ + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeOrderCap {
    pub d0: usize,
}

impl DerivativeOrderCap {
    pub fn for_dim(d: usize) -> Self {
        Self { d0: d / 2 + 1 }
    }
}

pub fn eval_phi(spec: &BernsteinSpec, lambda: f64) -> Result<f64> {
    spec.value(lambda)
}

/// `dⁿφ(λ)`; orders above the cap (or above 2) are rejected.
pub fn eval_phi_derivative(spec: &BernsteinSpec, n: usize, lambda: f64, cap: DerivativeOrderCap) -> Result<f64> {
    if n > cap.d0 {
        return Err(Error::Order { requested: n, cap: cap.d0 });
    }
    if n > 2 {
        return Err(Error::Order { requested: n, cap: 2 });
    }
    check_arg(lambda)?;
    Ok(spec.raw_derivative(n, lambda))
}

pub fn phi_inverse(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    spec.inverse(t)
}

/// Geometric grid on `[lo, hi]` with `per_decade` points per decade.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub label: String,
    pub declared: Scaling,
    /// Smallest and largest secant log-slope on the grid.
    pub fitted_lower: f64,
    pub fitted_upper: f64,
    /// Best constants for the declared exponents.
    pub n2_fitted: f64,
    pub n3_fitted: f64,
    /// `sup λⁿ|φ⁽ⁿ⁾(λ)|/φ(λ)` for `n = 1..=d0`.
    pub n4_fitted: Vec<f64>,
    pub positive: bool,
    pub monotone: bool,
    pub sandwich_ok: bool,
    /// `φ(λ)/λ` nonincreasing on the grid.
    pub bernstein_ratio_ok: bool,
    /// The fitted upper exponent is strictly below one.
    pub weak_scaling_below_one: bool,
    pub pass: bool,
    pub violations: Vec<String>,
}

const SLACK: f64 = 1.05;

/// Checks the weak-scaling sandwich and the derivative bounds on a geometric grid
/// spanning at least eight decades with at least 64 points per decade.
pub fn verify_bernstein_conditions(spec: &BernsteinSpec, grid: &[f64], d0: usize) -> Result<BernsteinReport> {
    check_grid(grid)?;
    if d0 == 0 || d0 > 2 {
        return Err(Error::Order { requested: d0, cap: 2 });
    }
    let vals: Vec<f64> = grid.iter().map(|&l| spec.raw(l)).collect();
    let mut violations = Vec::new();
    let positive = vals.iter().all(|v| v.is_finite() && *v > 0.0);
    if !positive {
        violations.push("φ is not positive and finite on the grid".to_string());
    }
    let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
    if !monotone {
        violations.push("φ is not nondecreasing".to_string());
    }
    let lg: Vec<f64> = grid.iter().map(|l| l.ln()).collect();
    let lv: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let mut fitted_lower = f64::INFINITY;
    let mut fitted_upper = f64::NEG_INFINITY;
    for i in 1..grid.len() {
        let s = (lv[i] - lv[i - 1]) / (lg[i] - lg[i - 1]);
        fitted_lower = fitted_lower.min(s);
        fitted_upper = fitted_upper.max(s);
    }
    let declared = spec.scaling();
    let (n2, _) = extreme_ratio(&lg, &lv, declared.lower);
    let (_, n3) = extreme_ratio(&lg, &lv, declared.upper);
    let sandwich_ok = positive && n2 >= declared.n_lower / SLACK && n3 <= declared.n_upper * SLACK;
    if !sandwich_ok {
        violations.push(format!(
            "weak scaling fails: N2 = {n2:.4}, N3 = {n3:.4} against declared ({}, {})",
            declared.n_lower, declared.n_upper
        ));
    }
    let mut n4 = Vec::with_capacity(d0);
    for n in 1..=d0 {
        let m = grid
            .iter()
            .zip(&vals)
            .map(|(&l, &v)| l.powi(n as i32) * spec.raw_derivative(n, l).abs() / v)
            .fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        if !m.is_finite() {
            violations.push(format!("derivative bound of order {n} is not finite"));
        }
        n4.push(m);
    }
    let bernstein_ratio_ok = fitted_upper <= 1.0 + 1e-9;
    let weak_scaling_below_one = fitted_upper < 1.0 - 1e-3;
    let pass = positive && monotone && sandwich_ok && n4.iter().all(|v| v.is_finite());
    Ok(BernsteinReport {
        label: spec.label(),
        declared,
        fitted_lower,
        fitted_upper,
        n2_fitted: n2,
        n3_fitted: n3,
        n4_fitted: n4,
        positive,
        monotone,
        sandwich_ok,
        bernstein_ratio_ok,
        weak_scaling_below_one,
        pass,
        violations,
    })
}

/// Minimum and maximum over `i < j` of `exp(g_j - g_i)` with `g = log φ - δ log λ`.
fn extreme_ratio(lg: &[f64], lv: &[f64], delta: f64) -> (f64, f64) {
    let g: Vec<f64> = lg.iter().zip(lv).map(|(a, b)| b - delta * a).collect();
    let mut run_max = g[0];
    let mut run_min = g[0];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in &g[1..] {
        lo = lo.min(x - run_max);
        hi = hi.max(x - run_min);
        run_max = run_max.max(x);
        run_min = run_min.min(x);
    }
    (lo.exp(), hi.exp())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 || grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Precondition("grid must hold at least three positive values".into()));
    }
    let r0 = grid[1] / grid[0];
    if r0 <= 1.0 || grid.windows(2).any(|w| ((w[1] / w[0]) / r0 - 1.0).abs() > 1e-8) {
        return Err(Error::Precondition("grid must be geometric and increasing".into()));
    }
    let decades = (grid[grid.len() - 1] / grid[0]).log10();
    if decades < 8.0 - 1e-9 {
        return Err(Error::Precondition(format!("grid spans {decades:.2} decades, need 8")));
    }
    let per_decade = 1.0 / r0.log10();
    if per_decade < 64.0 - 1e-6 {
        return Err(Error::Precondition(format!("grid has {per_decade:.1} points per decade, need 64")));
    }
    Ok(())
}
