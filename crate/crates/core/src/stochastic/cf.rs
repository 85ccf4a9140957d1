use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{path_rngs, sample_increment, ProcessSpec};
use crate::error::{Error, Result};
use crate::par;
use crate::symbols::SymbolSpec;

pub const MIN_SAMPLES: usize = 10_000;

/// `(1/n) Σ e^{iξ·X_j}` and its standard error `sqrt((1 - |m|²)/n)`.
pub fn empirical_cf(samples: &[Vec<f64>], xi: &[f64]) -> Result<(Complex64, f64)> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_SAMPLES, got: samples.len() });
    }
    if samples.iter().any(|s| s.len() != xi.len()) {
        return Err(Error::Configuration("sample and frequency dimensions differ".into()));
    }
    let n = samples.len() as f64;
    let phase = |j: usize| samples[j].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
    let re = par::sum_by(samples.len(), |j| phase(j).cos()) / n;
    let im = par::sum_by(samples.len(), |j| phase(j).sin()) / n;
    let m = Complex64::new(re, im);
    let var = (1.0 - m.norm_sqr()).max(0.0);
    Ok((m, (var / n).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfRow {
    pub s: f64,
    pub t: f64,
    pub xi: Vec<f64>,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub standard_error: f64,
    pub exact_re: f64,
    pub exact_im: f64,
    /// `|empirical - exact| / (3 n^{-1/2} + 1e-12)`
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfReport {
    pub samples: usize,
    pub rows: Vec<CfRow>,
    pub fraction_within: f64,
    pub max_deviation: f64,
    pub pass: bool,
}

impl CfReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,t,xi,empirical_re,empirical_im,standard_error,exact_re,exact_im,deviation\n");
        for r in &self.rows {
            let xi: Vec<String> = r.xi.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.s,
                r.t,
                xi.join(" "),
                r.empirical_re,
                r.empirical_im,
                r.standard_error,
                r.exact_re,
                r.exact_im,
                r.deviation
            ));
        }
        s
    }
}

/// Compares empirical characteristic functions of sampled increments with
/// `exp(Φ(s,t,ξ))`. Passes when at least 99% of the points deviate by at most
/// three standard errors.
pub fn verify_cf(
    spec: &ProcessSpec,
    sym: &SymbolSpec,
    pairs: &[(f64, f64)],
    xis: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Result<CfReport> {
    if spec.dim != sym.dim() || xis.iter().any(|x| x.len() != spec.dim) {
        return Err(Error::Configuration(format!(
            "process dimension {} and symbol dimension {} disagree",
            spec.dim,
            sym.dim()
        )));
    }
    let bound = 3.0 / (n as f64).sqrt() + 1e-12;
    let mut rows = Vec::new();
    for (pi, &(s, t)) in pairs.iter().enumerate() {
        let pair_seed = seed.wrapping_add((pi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let samples = par::map_range(n, |i| {
            let (mut a, mut b) = path_rngs(pair_seed, i as u64);
            sample_increment(spec, s, t, &mut a, &mut b)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for xi in xis {
            let (m, se) = empirical_cf(&samples, xi)?;
            let exact = sym.accumulate(s, t, xi)?.exp();
            rows.push(CfRow {
                s,
                t,
                xi: xi.clone(),
                empirical_re: m.re,
                empirical_im: m.im,
                standard_error: se,
                exact_re: exact.re,
                exact_im: exact.im,
                deviation: (m - exact).norm() / bound,
            });
        }
    }
    let within = rows.iter().filter(|r| r.deviation <= 1.0).count();
    let fraction = if rows.is_empty() { 1.0 } else { within as f64 / rows.len() as f64 };
    let max_dev = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(CfReport { samples: n, rows, fraction_within: fraction, max_deviation: max_dev, pass: fraction >= 0.99 })
}
