use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::par;
use crate::symbols::BernsteinSpec;

use super::{CellField, Domain};

/// Radii `min, min√2, min·2, …` up to `max`.
pub fn cube_ladder(min: f64, max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut c = min;
    while c <= max * (1.0 + 1e-12) {
        out.push(c);
        c *= std::f64::consts::SQRT_2;
    }
    out
}

/// `out[i] = max src[j]` over `j ∈ [i - back, i + ahead]` clipped to the slice.
fn window_max(src: &[f64], back: usize, ahead: usize, out: &mut [f64]) {
    let n = src.len();
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + ahead).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&b| src[b] <= src[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(back);
        while dq.front().is_some_and(|&f| f < lo) {
            dq.pop_front();
        }
        out[i] = src[*dq.front().unwrap()];
    }
}

/// `out[i] = Σ src[j]` over `j ∈ [i - back, i + ahead]` clipped to the slice.
fn window_sum(src: &[f64], back: usize, ahead: usize, out: &mut [f64]) {
    let n = src.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in src {
        prefix.push(prefix.last().unwrap() + v);
    }
    for i in 0..n {
        let lo = i.saturating_sub(back);
        let hi = (i + ahead + 1).min(n);
        out[i] = prefix[hi] - prefix[lo];
    }
}

/// Spatial ball decomposed into lines along the last axis: offsets in the
/// leading axes and the half-width along the last one.
fn ball_rows(dim: usize, radius_cells: f64) -> Vec<(Vec<i64>, usize)> {
    let r2 = radius_cells * radius_cells;
    let r = radius_cells.ceil() as i64;
    let lead = dim - 1;
    let mut rows = Vec::new();
    let mut o = vec![-r; lead];
    loop {
        let s: i64 = o.iter().map(|v| v * v).sum();
        let rem = r2 - s as f64;
        if rem > 0.0 {
            let mut k = rem.sqrt().floor() as i64;
            while (k * k) as f64 >= rem {
                k -= 1;
            }
            while (((k + 1) * (k + 1)) as f64) < rem {
                k += 1;
            }
            rows.push((o.clone(), k as usize));
        }
        let mut a = 0;
        while a < lead {
            o[a] += 1;
            if o[a] <= r {
                break;
            }
            o[a] = -r;
            a += 1;
        }
        if a == lead {
            break;
        }
    }
    rows
}

struct Layout {
    nt: usize,
    ns: usize,
    lead: usize,
    lines_per_slice: usize,
}

impl Layout {
    fn lead_index(&self, mut l: usize) -> Vec<i64> {
        let mut idx = vec![0i64; self.lead];
        for a in (0..self.lead).rev() {
            idx[a] = (l % self.ns) as i64;
            l /= self.ns;
        }
        idx
    }

    fn lead_flat(&self, idx: &[i64]) -> Option<usize> {
        let mut acc = 0usize;
        for &i in idx {
            if i < 0 || i >= self.ns as i64 {
                return None;
            }
            acc = acc * self.ns + i as usize;
        }
        Some(acc)
    }
}

/// Maximal function over grid-anchored cubes `(t0, t0 + φ(c)] × B_c(x0)`:
/// for every cell, the largest mean of `|f|` over a cube of the family
/// containing it. Cubes use cell centres for ball membership and round
/// `φ(c)` to whole time steps (at least one); values outside the grid count
/// as zero.
pub fn maximal_function(field: &CellField, phi: &BernsteinSpec, ladder: &[f64], domain: Domain) -> Result<CellField> {
    if ladder.is_empty() || ladder.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::Configuration("cube ladder must be non-empty and positive".into()));
    }
    if domain == Domain::Half && field.x0[0] < 0.0 {
        return Err(Error::Coverage("field extends outside the half space".into()));
    }
    let abs = field.map(f64::abs);
    let per_radius = par::map_range(ladder.len(), |i| single_radius(&abs, phi, ladder[i], domain));
    let mut out = vec![0.0f64; field.len()];
    for m in per_radius {
        for (o, v) in out.iter_mut().zip(m?) {
            *o = o.max(v);
        }
    }
    field.with_values(out)
}

fn single_radius(abs: &CellField, phi: &BernsteinSpec, c: f64, domain: Domain) -> Result<Vec<f64>> {
    let d = abs.dim;
    let lay = Layout { nt: abs.nt, ns: abs.ns, lead: d - 1, lines_per_slice: abs.ns.pow(d as u32 - 1) };
    let sl = abs.spatial_len();
    let w = ((phi.value(c)? / abs.dt).round() as usize).max(1);
    let rows = ball_rows(d, c / abs.h);

    // cells per cube, by anchor index along axis 0
    let inside = |i: i64| domain == Domain::Full || abs.x0[0] + (i as f64 + 0.5) * abs.h > 0.0;
    let counts: Vec<f64> = (0..abs.ns as i64)
        .map(|i0| {
            let cells: usize = rows
                .iter()
                .map(|(o, k)| {
                    if d == 1 {
                        (-(*k as i64)..=*k as i64).filter(|j| inside(i0 + j)).count()
                    } else if inside(i0 + o[0]) {
                        2 * k + 1
                    } else {
                        0
                    }
                })
                .sum();
            (cells * w) as f64
        })
        .collect();

    // forward time-window sums
    let mut tsum = vec![0.0; abs.len()];
    {
        let v = abs.values();
        let mut col = vec![0.0; lay.nt];
        let mut res = vec![0.0; lay.nt];
        for s in 0..sl {
            for j in 0..lay.nt {
                col[j] = v[j * sl + s];
            }
            window_sum(&col, 0, w - 1, &mut res);
            for j in 0..lay.nt {
                tsum[j * sl + s] = res[j];
            }
        }
    }

    // ball sums along last-axis lines, then means
    let lines = lay.nt * lay.lines_per_slice;
    let mut prefix = vec![0.0; lines * (lay.ns + 1)];
    for l in 0..lines {
        let p = &mut prefix[l * (lay.ns + 1)..(l + 1) * (lay.ns + 1)];
        for i in 0..lay.ns {
            p[i + 1] = p[i] + tsum[l * lay.ns + i];
        }
    }
    let mut mean = vec![0.0; abs.len()];
    for l in 0..lines {
        let (j, lf) = (l / lay.lines_per_slice, l % lay.lines_per_slice);
        let lead = lay.lead_index(lf);
        for i in 0..lay.ns {
            let mut s = 0.0;
            for (o, k) in &rows {
                let shifted: Vec<i64> = lead.iter().zip(o).map(|(a, b)| a + b).collect();
                let Some(sf) = lay.lead_flat(&shifted) else { continue };
                let base = (j * lay.lines_per_slice + sf) * (lay.ns + 1);
                let lo = i.saturating_sub(*k);
                let hi = (i + k + 1).min(lay.ns);
                s += prefix[base + hi] - prefix[base + lo];
            }
            let i0 = if d == 1 { i } else { lead[0] as usize };
            mean[l * lay.ns + i] = s / counts[i0];
        }
    }

    // spatial dilation: sliding maxima for each distinct half-width
    let mut widths: Vec<usize> = rows.iter().map(|r| r.1).collect();
    widths.sort_unstable();
    widths.dedup();
    let mut slid: Vec<Vec<f64>> = Vec::with_capacity(widths.len());
    for &k in &widths {
        let mut out = vec![0.0; abs.len()];
        for l in 0..lines {
            let r = l * lay.ns..(l + 1) * lay.ns;
            window_max(&mean[r.clone()], k, k, &mut out[r]);
        }
        slid.push(out);
    }
    let mut dil = vec![0.0f64; abs.len()];
    for l in 0..lines {
        let (j, lf) = (l / lay.lines_per_slice, l % lay.lines_per_slice);
        let lead = lay.lead_index(lf);
        for (o, k) in &rows {
            let shifted: Vec<i64> = lead.iter().zip(o).map(|(a, b)| a - b).collect();
            let Some(sf) = lay.lead_flat(&shifted) else { continue };
            let src = &slid[widths.binary_search(k).unwrap()];
            let base = (j * lay.lines_per_slice + sf) * lay.ns;
            for i in 0..lay.ns {
                let v = src[base + i];
                let dst = &mut dil[l * lay.ns + i];
                if v > *dst {
                    *dst = v;
                }
            }
        }
    }

    // time dilation: anchors at or before the cell, within w steps
    let mut out = vec![0.0; abs.len()];
    let mut col = vec![0.0; lay.nt];
    let mut res = vec![0.0; lay.nt];
    for s in 0..sl {
        for j in 0..lay.nt {
            col[j] = dil[j * sl + s];
        }
        window_max(&col, w - 1, 0, &mut res);
        for j in 0..lay.nt {
            out[j * sl + s] = res[j];
        }
    }
    Ok(out)
}
