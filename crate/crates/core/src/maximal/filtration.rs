use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbols::BernsteinSpec;

use super::{check_phi_assumptions, Domain};

/// One level of the dyadic filtration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiltrationLevel {
    pub n: i32,
    pub sigma: f64,
    /// `T_n = φ(2^{-n}) σ_n`, always `φ(1)` times a power of two.
    pub time_length: f64,
    /// `log2(T_n / φ(1))`.
    pub time_exponent: i32,
    pub side: f64,
    /// `log2` of the time-cell ratio to the level above (`n - 1`); zero at `n_min`.
    pub ell: i32,
}

impl FiltrationLevel {
    pub fn volume(&self, dim: usize) -> f64 {
        self.time_length * self.side.powi(dim as i32)
    }
}

/// Cell at a given level: time index `i ≥ 0`, spatial indices `i_1..i_d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub n: i32,
    pub time: i64,
    pub space: Vec<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionFiltration {
    #[serde(skip)]
    phi: BernsteinSpec,
    pub phi_label: String,
    pub dim: usize,
    pub domain: Domain,
    pub levels: Vec<FiltrationLevel>,
    /// Largest observed parent/child volume ratio.
    pub n0: f64,
    /// `2^{d+1} c̃`.
    pub n0_bound: f64,
    pub c_tilde: f64,
    /// Levels coarser than `n_min` are not represented.
    pub truncated_below: i32,
}

/// `log2(T_{n+1}/φ(1))` and `ℓ_{n+1}` from `T_n`.
pub(crate) fn step_up(phi: &BernsteinSpec, n: i32, phi1: f64, exp: i32) -> Result<(i32, i32)> {
    let t = phi1 * 2f64.powi(exp);
    let next = phi.value_or_zero(2f64.powi(-(n + 1)));
    if !(next > 0.0 && next.is_finite()) {
        return Err(Error::Domain(format!("scale function not positive at 2^-{}", n + 1)));
    }
    let ratio = t / next;
    let mut ell = ratio.log2().floor() as i32;
    // guard against rounding in log2
    while ratio / 2f64.powi(ell) >= 2.0 {
        ell += 1;
    }
    while ratio / 2f64.powi(ell) < 1.0 {
        ell -= 1;
    }
    if ell < 0 {
        return Err(Error::Domain("scale function is decreasing".into()));
    }
    Ok((exp - ell, ell))
}

/// `log2(T_{n-1}/φ(1))` and `ℓ_{n-1}` from `T_n`.
pub(crate) fn step_down(phi: &BernsteinSpec, n: i32, phi1: f64, exp: i32) -> Result<(i32, i32)> {
    let t = phi1 * 2f64.powi(exp);
    let prev = phi.value_or_zero(2f64.powi(-(n - 1)));
    if !(prev > 0.0 && prev.is_finite()) {
        return Err(Error::Domain(format!("scale function not finite at 2^{}", 1 - n)));
    }
    let ratio = prev / t;
    let mut ell = ratio.log2().ceil() as i32;
    let sigma = |l: i32| 2f64.powi(l) * t / prev;
    while sigma(ell) >= 2.0 {
        ell -= 1;
    }
    while sigma(ell) < 1.0 {
        ell += 1;
    }
    if ell < 0 {
        return Err(Error::Domain("scale function is decreasing".into()));
    }
    Ok((exp + ell, ell))
}

/// Builds levels `n_min..=n_max` inductively from `σ_0 = 1`.
pub fn build_filtration(phi: &BernsteinSpec, dim: usize, n_min: i32, n_max: i32, domain: Domain) -> Result<PartitionFiltration> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Configuration(format!("dimension {dim} not in 1..=3")));
    }
    if n_min > 0 || n_max < 0 {
        return Err(Error::Precondition(format!("level range [{n_min}, {n_max}] must contain 0")));
    }
    let assumptions = check_phi_assumptions(phi);
    if !(assumptions.positive && assumptions.monotone && assumptions.c_tilde.is_finite()) {
        return Err(Error::Precondition(format!("scale function {} fails the doubling assumption", phi.label())));
    }
    let phi1 = phi.value(1.0)?;
    let len = (n_max - n_min + 1) as usize;
    let mut exps = vec![0i32; len];
    let mut ells = vec![0i32; len];
    let zero = (-n_min) as usize;
    for k in zero..len - 1 {
        let n = n_min + k as i32;
        let (e, l) = step_up(phi, n, phi1, exps[k])?;
        exps[k + 1] = e;
        ells[k + 1] = l;
    }
    for k in (1..=zero).rev() {
        let n = n_min + k as i32;
        let (e, l) = step_down(phi, n, phi1, exps[k])?;
        exps[k - 1] = e;
        ells[k] = l;
    }
    let levels: Vec<FiltrationLevel> = (0..len)
        .map(|k| {
            let n = n_min + k as i32;
            let time_length = phi1 * 2f64.powi(exps[k]);
            let sigma = time_length / phi.value_or_zero(2f64.powi(-n));
            FiltrationLevel {
                n,
                sigma,
                time_length,
                time_exponent: exps[k],
                side: 2f64.powi(-n),
                ell: if k == 0 { 0 } else { ells[k] },
            }
        })
        .collect();
    for lv in &levels {
        if !(1.0 - 1e-12..2.0).contains(&lv.sigma) {
            return Err(Error::Precondition(format!("internal: sigma_{} = {} escaped [1,2)", lv.n, lv.sigma)));
        }
    }
    let parent_child = 2f64.powi(dim as i32);
    let n0 = levels.iter().skip(1).map(|l| parent_child * 2f64.powi(l.ell)).fold(parent_child, f64::max);
    Ok(PartitionFiltration {
        phi: phi.clone(),
        phi_label: phi.label(),
        dim,
        domain,
        levels,
        n0,
        n0_bound: 2f64.powi(dim as i32 + 1) * assumptions.c_tilde,
        c_tilde: assumptions.c_tilde,
        truncated_below: n_min,
    })
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

impl PartitionFiltration {
    pub fn phi(&self) -> &BernsteinSpec {
        &self.phi
    }

    pub fn n_min(&self) -> i32 {
        self.levels[0].n
    }

    pub fn n_max(&self) -> i32 {
        self.levels[self.levels.len() - 1].n
    }

    pub fn level(&self, n: i32) -> Option<&FiltrationLevel> {
        if n < self.n_min() || n > self.n_max() {
            return None;
        }
        self.levels.get((n - self.n_min()) as usize)
    }

    pub fn sigmas(&self) -> Vec<(i32, f64)> {
        self.levels.iter().map(|l| (l.n, l.sigma)).collect()
    }

    /// Parent/child volume ratio between levels `n - 1` and `n`.
    pub fn volume_ratio(&self, n: i32) -> Option<f64> {
        let c = self.level(n)?;
        let p = self.level(n - 1)?;
        Some(p.volume(self.dim) / c.volume(self.dim))
    }

    /// Whether the index names a cell of the partition (half-space cells need `i_1 ≥ 0`).
    pub fn is_cell(&self, cell: &CellIndex) -> bool {
        self.level(cell.n).is_some()
            && cell.time >= 0
            && cell.space.len() == self.dim
            && (self.domain == Domain::Full || cell.space[0] >= 0)
    }

    /// The unique level-`n - 1` cell containing `cell`.
    pub fn parent(&self, cell: &CellIndex) -> Option<CellIndex> {
        let lv = self.level(cell.n)?;
        self.level(cell.n - 1)?;
        let k = 1i64 << lv.ell;
        Some(CellIndex {
            n: cell.n - 1,
            time: floor_div(cell.time, k),
            space: cell.space.iter().map(|&i| floor_div(i, 2)).collect(),
        })
    }

    /// Time interval and spatial box of a cell.
    pub fn bounds(&self, cell: &CellIndex) -> Option<((f64, f64), Vec<(f64, f64)>)> {
        let lv = self.level(cell.n)?;
        let t = (cell.time as f64 * lv.time_length, (cell.time + 1) as f64 * lv.time_length);
        let x = cell.space.iter().map(|&i| (i as f64 * lv.side, (i + 1) as f64 * lv.side)).collect();
        Some((t, x))
    }

    /// Level-`n` cell containing the point `(t, x)`; cells are half-open on the left.
    pub fn locate(&self, n: i32, t: f64, x: &[f64]) -> Option<CellIndex> {
        let lv = self.level(n)?;
        if t <= 0.0 || x.len() != self.dim {
            return None;
        }
        let idx = |v: f64, len: f64| ((v / len).ceil() as i64) - 1;
        let cell = CellIndex { n, time: idx(t, lv.time_length), space: x.iter().map(|&v| idx(v, lv.side)).collect() };
        self.is_cell(&cell).then_some(cell)
    }

    /// Exhaustive index-level check over a window of cells at every level:
    /// each child lies inside its parent, parents are partition cells, and
    /// neighbouring cells abut without overlap. Returns the number of failures.
    pub fn check_nesting(&self, time_cells: i64, space_cells: i64) -> usize {
        let mut failures = 0;
        let lo = match self.domain {
            Domain::Full => -space_cells,
            Domain::Half => 0,
        };
        for lv in self.levels.iter().skip(1) {
            let mut space = vec![lo; self.dim];
            loop {
                for it in 0..time_cells {
                    let cell = CellIndex { n: lv.n, time: it, space: space.clone() };
                    let Some(parent) = self.parent(&cell) else {
                        failures += 1;
                        continue;
                    };
                    if !self.is_cell(&parent) {
                        failures += 1;
                        continue;
                    }
                    let (ct, cx) = self.bounds(&cell).unwrap();
                    let (pt, px) = self.bounds(&parent).unwrap();
                    let inside = ct.0 >= pt.0 && ct.1 <= pt.1 && cx.iter().zip(&px).all(|(c, p)| c.0 >= p.0 && c.1 <= p.1);
                    let mut next = cell.clone();
                    next.time += 1;
                    let abut = self.bounds(&next).map(|(nt, _)| nt.0 == ct.1).unwrap_or(false);
                    if !inside || !abut {
                        failures += 1;
                    }
                }
                let mut axis = 0;
                loop {
                    if axis == self.dim {
                        break;
                    }
                    space[axis] += 1;
                    if space[axis] < space_cells {
                        break;
                    }
                    space[axis] = lo;
                    axis += 1;
                }
                if axis == self.dim {
                    break;
                }
            }
        }
        failures
    }

    /// Levels below `n_min`, continuing the downward induction. Here `ell` is
    /// the ratio exponent to the next finer level.
    pub(crate) fn extend_down(&self, count: usize) -> Result<Vec<FiltrationLevel>> {
        let phi1 = self.phi.value(1.0)?;
        let mut out = Vec::with_capacity(count);
        let first = &self.levels[0];
        let (mut n, mut exp) = (first.n, first.time_exponent);
        for _ in 0..count {
            let (e, l) = step_down(&self.phi, n, phi1, exp)?;
            n -= 1;
            exp = e;
            let time_length = phi1 * 2f64.powi(exp);
            out.push(FiltrationLevel {
                n,
                sigma: time_length / self.phi.value_or_zero(2f64.powi(-n)),
                time_length,
                time_exponent: exp,
                side: 2f64.powi(-n),
                ell: l,
            });
        }
        Ok(out)
    }
}
