use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous step function on `[0, ∞)`. The last value extends to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise", into = "RawPiecewise")]
pub struct PiecewiseConstant {
    starts: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawPiecewise {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawPiecewise> for PiecewiseConstant {
    type Error = Error;
    fn try_from(r: RawPiecewise) -> Result<Self> {
        PiecewiseConstant::new(r.starts, r.values)
    }
}

impl From<PiecewiseConstant> for RawPiecewise {
    fn from(p: PiecewiseConstant) -> Self {
        RawPiecewise { starts: p.starts, values: p.values }
    }
}

impl PiecewiseConstant {
    pub fn new(starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(Error::Domain("piecewise function needs matching, nonempty knots and values".into()));
        }
        if starts[0] != 0.0 {
            return Err(Error::Domain("first knot must be 0".into()));
        }
        if starts.windows(2).any(|w| !(w[1] > w[0])) || starts.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Domain("knots must be finite and strictly increasing".into()));
        }
        Ok(Self { starts, values })
    }

    pub fn constant(v: f64) -> Self {
        Self { starts: vec![0.0], values: vec![v] }
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.starts.partition_point(|&s| s <= t).max(1) - 1;
        self.values[i]
    }

    /// Pieces `(length, value)` covering `[s, t]`.
    pub fn segments(&self, s: f64, t: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if t <= s {
            return out;
        }
        let n = self.starts.len();
        let mut i = self.starts.partition_point(|&x| x <= s).max(1) - 1;
        let mut a = s;
        while a < t {
            let end = if i + 1 < n { self.starts[i + 1].min(t) } else { t };
            if end > a {
                out.push((end - a, self.values[i]));
            }
            a = end;
            i += 1;
            if i >= n {
                if a < t {
                    out.push((t - a, self.values[n - 1]));
                }
                break;
            }
        }
        out
    }

    /// Exact integral over `[s, t]` of `g(value)`.
    pub fn integral_of(&self, s: f64, t: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.segments(s, t).into_iter().map(|(len, v)| len * g(v)).sum()
    }

    pub fn integral(&self, s: f64, t: f64) -> f64 {
        self.integral_of(s, t, |v| v)
    }

    /// Smallest and largest absolute value.
    pub fn abs_bounds(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v.abs()), b.max(v.abs())))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_cover_interval() {
        let p = PiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.segments(0.5, 2.5), vec![(0.5, 1.0), (1.0, 2.0), (0.5, 3.0)]);
        assert_eq!(p.integral(0.0, 3.0), 1.0 + 2.0 + 3.0);
        assert_eq!(p.value_at(1.0), 2.0);
        assert_eq!(p.value_at(10.0), 3.0);
        assert_eq!(p.integral(5.0, 6.0), 3.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PiecewiseConstant::new(vec![0.5], vec![1.0]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
