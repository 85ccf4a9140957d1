use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bernstein::{geometric_grid, DerivativeOrderCap};
use super::symbol::SymbolSpec;
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolAuditConfig {
    pub magnitudes: Vec<f64>,
    pub times: Vec<f64>,
    pub random_directions: usize,
    pub seed: u64,
    /// Angles (radians) from the coordinate axes probed in addition to random directions.
    pub axis_angles: Vec<f64>,
    /// Boundedness is judged by comparing the sup over angles `>= fine_angle`
    /// with the sup over angles `>= coarse_angle`.
    pub coarse_angle: f64,
    pub fine_angle: f64,
}

impl SymbolAuditConfig {
    /// Defaults with time samples at every jump of the symbol, the midpoints
    /// between jumps, and one point past the last jump.
    pub fn for_symbol(sym: &SymbolSpec, horizon: f64) -> Self {
        let mut times = vec![0.0];
        let bp = sym.breakpoints(0.0, horizon);
        let mut prev = 0.0;
        for &b in &bp {
            times.push(0.5 * (prev + b));
            times.push(b);
            prev = b;
        }
        times.push(0.5 * (prev + horizon));
        times.push(horizon);
        Self {
            magnitudes: geometric_grid(1e-3, 1e3, 8),
            times,
            random_directions: 32,
            seed: 7,
            axis_angles: vec![1e-1, 1e-2, 1e-3, 1e-4],
            coarse_angle: 1e-3,
            fine_angle: 1e-4,
        }
    }
}

/// One audited sample point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolAuditRow {
    pub t: f64,
    pub direction: usize,
    /// Angle from the nearest axis for axis-approach directions, `None` for random ones.
    pub angle: Option<f64>,
    pub magnitude: f64,
    /// `-Re Ψ / φ(|ξ|²)`
    pub re_ratio: f64,
    /// `max_{|γ|=n} |ξ|ⁿ |D^γ Ψ| / φ(|ξ|²)` for `n = 0..=d0`.
    pub derivative_ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolAuditSummary {
    pub id: String,
    pub dim: usize,
    pub d0: usize,
    pub delta1: f64,
    pub n1: f64,
    pub n1_coarse: f64,
    pub finite: bool,
    pub bounded_under_refinement: bool,
    pub pass: bool,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolAuditReport {
    pub summary: SymbolAuditSummary,
    pub rows: Vec<SymbolAuditRow>,
}

impl SymbolAuditReport {
    pub fn to_csv(&self) -> String {
        let d0 = self.summary.d0;
        let mut s = String::from("t,direction,angle,magnitude,re_ratio");
        for n in 0..=d0 {
            s.push_str(&format!(",d{n}_ratio"));
        }
        s.push('\n');
        for r in &self.rows {
            let angle = r.angle.map(|a| format!("{a:e}")).unwrap_or_default();
            s.push_str(&format!("{},{},{},{:e},{:e}", r.t, r.direction, angle, r.magnitude, r.re_ratio));
            for v in &r.derivative_ratios {
                s.push_str(&format!(",{v:e}"));
            }
            s.push('\n');
        }
        s
    }
}

fn directions(dim: usize, cfg: &SymbolAuditConfig) -> Vec<(Vec<f64>, Option<f64>)> {
    if dim == 1 {
        return vec![(vec![1.0], None), (vec![-1.0], None)];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for _ in 0..cfg.random_directions {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        out.push((v, None));
    }
    for axis in 0..dim {
        for &th in &cfg.axis_angles {
            let mut v = vec![0.0; dim];
            v[axis] = th.cos();
            v[(axis + 1) % dim] = th.sin();
            out.push((v, Some(th)));
        }
    }
    out
}

/// Finite-difference audit of the principal part of a symbol: lower bound on
/// `-Re Ψ` and derivative bounds up to order `⌊d/2⌋ + 1`.
pub fn verify_symbol_conditions(sym: &SymbolSpec, cfg: &SymbolAuditConfig) -> Result<SymbolAuditReport> {
    if cfg.magnitudes.is_empty() || cfg.times.is_empty() {
        return Err(Error::Precondition("audit needs magnitudes and times".into()));
    }
    let principal = sym.principal();
    let dim = sym.dim();
    let d0 = DerivativeOrderCap::for_dim(dim).d0;
    if d0 > 2 {
        return Err(Error::Order { requested: d0, cap: 2 });
    }
    let phi = sym.reference();
    let dirs = directions(dim, cfg);
    let mut jobs = Vec::new();
    for &t in &cfg.times {
        for (k, d) in dirs.iter().enumerate() {
            for &m in &cfg.magnitudes {
                jobs.push((t, k, d.1, m));
            }
        }
    }
    let rows: Vec<SymbolAuditRow> = par::map_range(jobs.len(), |j| {
        let (t, k, angle, m) = jobs[j];
        let xi: Vec<f64> = dirs[k].0.iter().map(|x| x * m).collect();
        let f = |x: &[f64]| principal.eval(t, x);
        let scale = phi.value_or_zero(m * m);
        let v0 = f(&xi);
        let mut ratios = vec![v0.norm() / scale];
        let h = 1e-4 * m;
        let shifted = |i: usize, a: f64, j: usize, b: f64| {
            let mut y = xi.clone();
            y[i] += a;
            y[j] += b;
            f(&y)
        };
        let mut first = 0.0f64;
        for i in 0..dim {
            let d = (shifted(i, h, i, 0.0) - shifted(i, -h, i, 0.0)) / (2.0 * h);
            first = first.max(d.norm());
        }
        ratios.push(m * first / scale);
        if d0 >= 2 {
            let mut second = 0.0f64;
            for i in 0..dim {
                for j in i..dim {
                    let d: Complex64 = if i == j {
                        (shifted(i, h, i, 0.0) - v0 * 2.0 + shifted(i, -h, i, 0.0)) / (h * h)
                    } else {
                        (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) + shifted(i, -h, j, -h))
                            / (4.0 * h * h)
                    };
                    second = second.max(d.norm());
                }
            }
            ratios.push(m * m * second / scale);
        }
        SymbolAuditRow { t, direction: k, angle, magnitude: m, re_ratio: -v0.re / scale, derivative_ratios: ratios }
    });

    let mut violations = Vec::new();
    let finite = rows.iter().all(|r| r.re_ratio.is_finite() && r.derivative_ratios.iter().all(|v| v.is_finite()));
    if !finite {
        violations.push("non-finite symbol value or derivative".into());
    }
    let delta1 = rows.iter().map(|r| r.re_ratio).fold(f64::INFINITY, f64::min);
    if !(delta1 > 0.0) {
        violations.push(format!("-Re Ψ is not bounded below by a positive multiple of φ (δ1 = {delta1:e})"));
    }
    let sup_over = |min_angle: f64| {
        rows.iter()
            .filter(|r| r.angle.is_none_or(|a| a >= min_angle))
            .flat_map(|r| r.derivative_ratios.iter().cloned())
            .fold(0.0f64, f64::max)
    };
    let n1 = sup_over(cfg.fine_angle);
    let n1_coarse = sup_over(cfg.coarse_angle);
    let bounded = n1 <= 2.0 * n1_coarse;
    if !bounded {
        violations.push(format!(
            "derivative ratios grow near the axes: {n1:e} at angle {} vs {n1_coarse:e} at angle {}",
            cfg.fine_angle, cfg.coarse_angle
        ));
    }
    let pass = finite && delta1 > 0.0 && bounded;
    Ok(SymbolAuditReport {
        summary: SymbolAuditSummary {
            id: sym.id().to_string(),
            dim,
            d0,
            delta1,
            n1,
            n1_coarse,
            finite,
            bounded_under_refinement: bounded,
            pass,
            violations,
        },
        rows,
    })
}
