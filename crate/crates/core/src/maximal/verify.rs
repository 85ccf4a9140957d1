use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;

use super::{cube_ladder, maximal_function, sharp_function, CellField, Domain, PartitionFiltration};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FsHlConfig {
    pub fields: usize,
    pub seed: u64,
    pub ps: Vec<f64>,
    /// Level of the cell that carries the fields; defaults to 0.
    pub region_level: Option<i32>,
    /// Finest level resolved; defaults to the finest level within `atom_budget`.
    pub finest_level: Option<i32>,
    pub atom_budget: usize,
    /// Spatial points per axis of the coarser maximal-function grid.
    pub hl_points: usize,
}

impl FsHlConfig {
    pub fn new(fields: usize, seed: u64, ps: Vec<f64>) -> Self {
        Self { fields, seed, ps, region_level: None, finest_level: None, atom_budget: 1 << 17, hl_points: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FsRow {
    pub field: usize,
    pub p: f64,
    pub norm: f64,
    pub sharp_norm: f64,
    pub constant: f64,
    /// `‖f‖_p / ‖f^#‖_p`, zero when both vanish.
    pub ratio: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HlRow {
    pub p: f64,
    pub points: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FsHlReport {
    pub phi: String,
    pub dim: usize,
    pub domain: Domain,
    pub region_level: i32,
    pub finest_level: i32,
    pub atoms: usize,
    /// Coarser ancestors of the region included in the sharp norm.
    pub exterior_levels: usize,
    pub n0: f64,
    /// `(p, (2q)^p N₀^{p-1})`
    pub constants: Vec<(f64, f64)>,
    pub fs_rows: Vec<FsRow>,
    pub fs_violations: usize,
    pub max_fs_ratio: Vec<(f64, f64)>,
    pub hl: Vec<HlRow>,
    pub hl_relative_change: Vec<(f64, f64)>,
    pub hl_stable: bool,
    pub pass: bool,
}

const HL_TOLERANCE: f64 = 0.2;
const EXTERIOR_DECADES: f64 = 12.0;

fn field_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct Region {
    n_r: i32,
    n_f: i32,
    /// atoms per region along time and each spatial axis
    nt: usize,
    ns: usize,
    dt: f64,
    h: f64,
}

fn choose_region(filt: &PartitionFiltration, cfg: &FsHlConfig) -> Result<Region> {
    let n_r = cfg.region_level.unwrap_or(0);
    let top = filt.level(n_r).ok_or_else(|| Error::Configuration(format!("region level {n_r} outside the filtration")))?;
    let atoms = |n: i32| -> Option<(usize, usize)> {
        let lv = filt.level(n)?;
        let tb = top.time_exponent - lv.time_exponent;
        let sb = n - n_r;
        if tb > 40 || sb * filt.dim as i32 > 40 {
            return None;
        }
        Some((1usize << tb, 1usize << sb))
    };
    let size = |(t, s): (usize, usize)| t * s.pow(filt.dim as u32);
    let n_f = match cfg.finest_level {
        Some(n) => n,
        None => ((n_r + 1)..=filt.n_max()).take_while(|&n| atoms(n).is_some_and(|a| size(a) <= cfg.atom_budget)).last().unwrap_or(n_r + 1),
    };
    let (nt, ns) = atoms(n_f).ok_or_else(|| Error::Configuration(format!("finest level {n_f} outside the filtration")))?;
    if n_f <= n_r {
        return Err(Error::Configuration(format!("finest level {n_f} must exceed region level {n_r}")));
    }
    let fine = filt.level(n_f).unwrap();
    Ok(Region { n_r, n_f, nt, ns, dt: fine.time_length, h: fine.side })
}

/// Random field carried by a level `n_r + 1` or `n_r + 2` sub-cell of the
/// region, constant on cells of a random intermediate level.
fn fs_field(filt: &PartitionFiltration, reg: &Region, seed: u64, index: usize) -> Result<CellField> {
    let d = filt.dim;
    let mut rng = field_rng(seed, index as u64);
    let sup_level = (reg.n_r + rng.random_range(1..=2)).min(reg.n_f);
    let grain = rng.random_range(sup_level..=reg.n_f);
    let block = |n: i32| {
        let lv = filt.level(n).unwrap();
        ((lv.time_length / reg.dt).round() as usize, 1usize << (reg.n_f - n))
    };
    let (st, ss) = block(sup_level);
    let (gt, gs) = block(grain);
    let sup_t = rng.random_range(0..reg.nt / st);
    let sup_x: Vec<usize> = (0..d).map(|_| rng.random_range(0..reg.ns / ss)).collect();
    let mean = rng.random_range(-2.0..2.0);
    let gns = reg.ns / gs;
    let grains = (reg.nt / gt) * gns.pow(d as u32);
    let vals: Vec<f64> = (0..grains).map(|_| mean + normal(&mut rng)).collect();
    let mut f = CellField::zeros(0.0, reg.dt, reg.nt, vec![0.0; d], reg.h, reg.ns)?;
    let mut out = vec![0.0; f.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let (j, idx) = f.unflatten(k);
        if j / st != sup_t || idx.iter().zip(&sup_x).any(|(i, s)| i / ss != *s) {
            continue;
        }
        let g = idx.iter().fold(j / gt, |acc, &i| acc * gns + i / gs);
        *o = vals[g];
    }
    f.values_mut().copy_from_slice(&out);
    Ok(f)
}

/// Region volume and ancestors `(V_m)` for `m < n_r`, finest first, until the
/// volume exceeds the region's by `EXTERIOR_DECADES` orders of magnitude.
fn ancestors(filt: &PartitionFiltration, n_r: i32) -> Result<(f64, Vec<f64>)> {
    let d = filt.dim;
    let vr = filt.level(n_r).unwrap().volume(d);
    let mut vols: Vec<f64> = (filt.n_min()..n_r).rev().map(|n| filt.level(n).unwrap().volume(d)).collect();
    let limit = vr * 10f64.powf(EXTERIOR_DECADES);
    if vols.last().is_none_or(|v| *v < limit) {
        let mut more = 16;
        loop {
            let ext = filt.extend_down(more)?;
            let all: Vec<f64> = vols.iter().copied().chain(ext.iter().map(|l| l.volume(d))).collect();
            if all.last().is_some_and(|v| *v >= limit) || more >= 4096 {
                vols = all;
                break;
            }
            more *= 4;
        }
    }
    let cut = vols.iter().position(|v| *v >= limit).map_or(vols.len(), |i| i + 1);
    vols.truncate(cut);
    Ok((vr, vols))
}

struct FsField {
    norms: Vec<(f64, f64)>,
}

fn fs_single(filt: &PartitionFiltration, f: &CellField, vr: f64, anc: &[f64], ps: &[f64]) -> Result<FsField> {
    let interior = sharp_function(f, filt)?;
    let vol = f.cell_volume();
    let total: f64 = par::pairwise_sum(f.values()) * vol;
    // mean oscillation over each ancestor: the region contributes |f - m|,
    // the rest of the ancestor contributes |m|
    let osc: Vec<f64> = anc
        .iter()
        .map(|&v| {
            let m = total / v;
            let inside: Vec<f64> = f.values().iter().map(|x| (x - m).abs()).collect();
            (par::pairwise_sum(&inside) * vol + (v - vr) * m.abs()) / v
        })
        .collect();
    // running maximum from the coarsest ancestor inwards
    let mut run = vec![0.0; osc.len()];
    let mut acc = 0.0f64;
    for i in (0..osc.len()).rev() {
        acc = acc.max(osc[i]);
        run[i] = acc;
    }
    let ext_max = run.first().copied().unwrap_or(0.0);
    let norms = ps
        .iter()
        .map(|&p| {
            let lhs = f.lp_norm(p);
            let inner: Vec<f64> = interior.values().iter().map(|s| s.max(ext_max).powf(p)).collect();
            let mut sharp = par::pairwise_sum(&inner) * vol;
            let mut prev = vr;
            for (i, &v) in anc.iter().enumerate() {
                sharp += (v - prev) * run[i].powf(p);
                prev = v;
            }
            (lhs, sharp.powf(1.0 / p))
        })
        .collect();
    Ok(FsField { norms })
}

/// Random field for the maximal-function check: independent values on an
/// 8-per-axis block pattern, so every grid resolution sees the same function.
fn hl_field(dim: usize, domain: Domain, horizon: f64, points: usize, seed: u64, index: usize) -> Result<CellField> {
    const BLOCKS: usize = 8;
    let mut rng = field_rng(seed ^ 0x5eed_0f41, index as u64);
    let n = BLOCKS.pow(dim as u32 + 1);
    let mut vals: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.3 { normal(&mut rng) } else { 0.0 }).collect();
    if vals.iter().all(|v| *v == 0.0) {
        vals[rng.random_range(0..n)] = 1.0;
    }
    let x0 = hl_origin(dim, domain);
    let h = 2.0 / points as f64;
    let dt = horizon / points as f64;
    CellField::from_fn(0.0, dt, points, x0.clone(), h, points, |t, x| {
        let bt = ((t / horizon * BLOCKS as f64) as usize).min(BLOCKS - 1);
        let b = x.iter().zip(&x0).fold(bt, |acc, (xi, oi)| {
            acc * BLOCKS + (((xi - oi) / 2.0 * BLOCKS as f64) as usize).min(BLOCKS - 1)
        });
        vals[b]
    })
}

fn hl_origin(dim: usize, domain: Domain) -> Vec<f64> {
    let mut x0 = vec![-1.0; dim];
    if domain == Domain::Half {
        x0[0] = 0.0;
    }
    x0
}

fn lp_ratio(num: &CellField, den: &CellField, p: f64) -> f64 {
    let d = den.lp_norm(p);
    if d == 0.0 {
        0.0
    } else {
        num.lp_norm(p) / d
    }
}

/// Fefferman–Stein inequality with constant `(2q)^p N₀^{p-1}` on random
/// fields carried by one filtration cell, and maximal-function `L_p` ratios
/// on two grid resolutions.
pub fn verify_fs_hl(filt: &PartitionFiltration, cfg: &FsHlConfig) -> Result<FsHlReport> {
    if cfg.ps.iter().any(|p| !(*p > 1.0 && p.is_finite())) {
        return Err(Error::Precondition("exponents must lie in (1, inf)".into()));
    }
    if cfg.hl_points < 8 || cfg.hl_points % 8 != 0 {
        return Err(Error::Configuration("hl_points must be a positive multiple of 8".into()));
    }
    let reg = choose_region(filt, cfg)?;
    let (vr, anc) = ancestors(filt, reg.n_r)?;
    let mut n0 = filt.n0;
    let mut prev = vr;
    for &v in &anc {
        n0 = n0.max(v / prev);
        prev = v;
    }
    for n in reg.n_r + 1..=reg.n_f {
        n0 = n0.max(filt.volume_ratio(n).unwrap_or(0.0));
    }
    let constants: Vec<(f64, f64)> = cfg
        .ps
        .iter()
        .map(|&p| {
            let q = p / (p - 1.0);
            (p, (2.0 * q).powf(p) * n0.powf(p - 1.0))
        })
        .collect();

    let per_field = par::map_range(cfg.fields, |i| -> Result<FsField> {
        let f = fs_field(filt, &reg, cfg.seed, i)?;
        fs_single(filt, &f, vr, &anc, &cfg.ps)
    });
    let mut fs_rows = Vec::new();
    for (i, r) in per_field.into_iter().enumerate() {
        let r = r?;
        for ((p, c), (lhs, sharp)) in constants.iter().zip(r.norms) {
            let ratio = if sharp > 0.0 { lhs / sharp } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
            fs_rows.push(FsRow { field: i, p: *p, norm: lhs, sharp_norm: sharp, constant: *c, ratio, violated: lhs > c * sharp * (1.0 + 1e-12) });
        }
    }
    let fs_violations = fs_rows.iter().filter(|r| r.violated).count();
    let max_fs_ratio = cfg
        .ps
        .iter()
        .map(|&p| (p, fs_rows.iter().filter(|r| r.p == p).map(|r| r.ratio).fold(0.0, f64::max)))
        .collect();

    let phi = filt.phi();
    let horizon = phi.value(1.0)?;
    let mut hl = Vec::new();
    for points in [cfg.hl_points, 2 * cfg.hl_points] {
        let h = 2.0 / points as f64;
        let ladder = cube_ladder(h, 2.0);
        let ratios = par::map_range(cfg.fields, |i| -> Result<Vec<f64>> {
            let f = hl_field(filt.dim, filt.domain, horizon, points, cfg.seed, i)?;
            let m = maximal_function(&f, phi, &ladder, filt.domain)?;
            Ok(cfg.ps.iter().map(|&p| lp_ratio(&m, &f, p)).collect())
        });
        let ratios: Vec<Vec<f64>> = ratios.into_iter().collect::<Result<_>>()?;
        for (k, &p) in cfg.ps.iter().enumerate() {
            let col: Vec<f64> = ratios.iter().map(|r| r[k]).collect();
            let max_ratio = col.iter().copied().fold(0.0, f64::max);
            let mean_ratio = col.iter().sum::<f64>() / col.len().max(1) as f64;
            hl.push(HlRow { p, points, max_ratio, mean_ratio });
        }
    }
    let np = cfg.ps.len();
    let hl_relative_change: Vec<(f64, f64)> =
        (0..np).map(|k| (hl[k].p, (hl[np + k].max_ratio - hl[k].max_ratio).abs() / hl[k].max_ratio)).collect();
    let hl_stable = hl_relative_change.iter().all(|(_, c)| *c <= HL_TOLERANCE) && hl.iter().all(|r| r.max_ratio.is_finite());
    Ok(FsHlReport {
        phi: filt.phi_label.clone(),
        dim: filt.dim,
        domain: filt.domain,
        region_level: reg.n_r,
        finest_level: reg.n_f,
        atoms: reg.nt * reg.ns.pow(filt.dim as u32),
        exterior_levels: anc.len(),
        n0,
        constants,
        fs_rows,
        fs_violations,
        max_fs_ratio,
        hl,
        hl_relative_change,
        hl_stable,
        pass: fs_violations == 0 && hl_stable,
    })
}
