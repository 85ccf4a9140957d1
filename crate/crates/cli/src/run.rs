use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use jumpheat::io::{self, read_rows};
use jumpheat::kernels::{compute_kernel, hormander_sup, HormanderConfig, KernelKind};
use jumpheat::maximal::{build_filtration, verify_fs_hl, Domain, FsHlConfig};
use jumpheat::registry;
use jumpheat::solver::{band_limited_source, estimate_ratio_harness, phi_potential_norm, solve, HarnessConfig, SourceFamily, SpaceTimeField};
use jumpheat::spectral::GridSpec;
use jumpheat::stochastic::{interpolate, mc_solution, verify_cf};
use jumpheat::symbols::{geometric_grid, verify_bernstein_conditions, verify_symbol_conditions, BernsteinSpec, SymbolAuditConfig, SymbolSpec};

use crate::config::{parse_fields, parse_grid, parse_source, parse_which, ExperimentConfig, Kind, Rows, Source, UsageError};

#[derive(Debug)]
pub enum Failure {
    Usage(UsageError),
    Numerical(jumpheat::Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e)
    }
}

impl From<jumpheat::Error> for Failure {
    fn from(e: jumpheat::Error) -> Self {
        Failure::Numerical(e)
    }
}

type Run<T> = Result<T, Failure>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound }
    }

    fn below(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value < bound }
    }
}

/// Results of one experiment: a JSON summary, verification checks and tables.
pub struct Outcome {
    pub details: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn symbol(field: &str, id: &str, dim: usize) -> Run<SymbolSpec> {
    registry::symbol(id, dim).map_err(|e| UsageError::new(field, e.to_string()).into())
}

fn phi_or_reference(cfg: &ExperimentConfig, sym: &SymbolSpec) -> Run<BernsteinSpec> {
    match &cfg.phi {
        Some(id) => Ok(registry::phi(id)?),
        None => Ok(sym.reference().clone()),
    }
}

fn rows(field: &str, r: &Rows) -> Run<Vec<Vec<f64>>> {
    match r {
        Rows::Inline(v) => Ok(v.clone()),
        Rows::File(p) => read_rows(p).map_err(|e| UsageError::new(field, e.to_string()).into()),
    }
}

fn dim(cfg: &ExperimentConfig) -> Run<usize> {
    match (&cfg.grid, cfg.dim) {
        (Some(g), Some(d)) if parse_grid(g)?.dim != d => Err(UsageError::new("dim", "disagrees with the grid dimension").into()),
        (Some(g), _) => Ok(parse_grid(g)?.dim),
        (None, d) => Ok(d.unwrap_or(1)),
    }
}

fn grid_or(cfg: &ExperimentConfig, default: &str) -> Run<GridSpec> {
    match &cfg.grid {
        Some(g) => Ok(parse_grid(g)?),
        None => {
            let mut g = parse_grid(default)?;
            if let Some(d) = cfg.dim {
                g = GridSpec::new(d, g.half_extent, g.points)?;
            }
            Ok(g)
        }
    }
}

fn bump(grid: GridSpec, t_end: f64, steps: usize) -> jumpheat::Result<SpaceTimeField> {
    SpaceTimeField::from_fn(grid, t_end, steps, |t, x| (1.0 + 0.5 * t) * (-x.iter().map(|v| v * v).sum::<f64>()).exp())
}

fn build_source(cfg: &ExperimentConfig, grid_default: &str, steps_default: usize) -> Run<(SpaceTimeField, String)> {
    let spec = cfg.source.clone().unwrap_or_else(|| "builtin:bump".into());
    let src = parse_source(&spec)?;
    if let Source::Stored(base) = &src {
        let f = io::read_field(base).map_err(|e| UsageError::new("source", e.to_string()))?;
        return Ok((f, spec));
    }
    let grid = grid_or(cfg, grid_default)?;
    let t_end = cfg.t_end.unwrap_or(1.0);
    let steps = cfg.steps.unwrap_or(steps_default);
    let f = match src {
        Source::Bump => bump(grid, t_end, steps)?,
        Source::Random(seed) => {
            let limit = ((grid.points / 4).max(1) as f64) * PI / grid.half_extent;
            band_limited_source(grid, t_end, steps, seed, limit.min(8.0), 6)?
        }
        Source::Stored(_) => unreachable!(),
    };
    Ok((f, spec))
}

fn out_path(out: Option<&Path>, name: &str) -> Option<PathBuf> {
    out.map(|o| o.join(name))
}

pub fn run(kind: Kind, cfg: &ExperimentConfig, out: Option<&Path>) -> Run<Outcome> {
    match kind {
        Kind::CheckSymbol => check_symbol(cfg),
        Kind::Kernel => kernel(cfg, out),
        Kind::Solve => solve_cmd(cfg, out),
        Kind::Estimate => estimate(cfg),
        Kind::McCompare => mc_compare(cfg),
        Kind::VerifyCf => verify_cf_cmd(cfg),
        Kind::Maximal => maximal(cfg),
        Kind::Hormander => hormander(cfg),
    }
}

fn check_symbol(cfg: &ExperimentConfig) -> Run<Outcome> {
    let id = cfg.symbol.as_deref().unwrap();
    let sym = symbol("symbol", id, dim(cfg)?)?;
    let horizon = cfg.t_end.unwrap_or(2.0);
    let audit = verify_symbol_conditions(&sym, &SymbolAuditConfig::for_symbol(&sym, horizon))?;
    let bern = verify_bernstein_conditions(sym.reference(), &geometric_grid(1e-4, 1e4, 64), sym.dim())?;
    let checks = vec![Check {
        name: "symbol conditions".into(),
        value: audit.summary.n1,
        bound: f64::INFINITY,
        pass: audit.summary.pass,
    }];
    Ok(Outcome {
        details: json!({ "symbol": id, "dim": sym.dim(), "audit": audit.summary, "reference": bern }),
        checks,
        tables: vec![("audit.csv".into(), audit.to_csv())],
    })
}

fn kernel(cfg: &ExperimentConfig, out: Option<&Path>) -> Run<Outcome> {
    let grid = parse_grid(cfg.grid.as_deref().unwrap())?;
    let id = cfg.symbol.as_deref().unwrap();
    let sym = symbol("symbol", id, grid.dim)?;
    let psi = phi_or_reference(cfg, &sym)?;
    let kind = parse_which(cfg.which.as_deref().unwrap())?;
    let (s, t) = (cfg.s.unwrap(), cfg.t.unwrap());
    let snap = compute_kernel(&sym, &psi, s, t, &grid, kind)?;
    let mass = snap.mass();
    if let Some(base) = out_path(out, "kernel") {
        let mut bytes = Vec::with_capacity(snap.values.len() * 16);
        for v in &snap.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        std::fs::write(base.with_extension("bin"), bytes).map_err(jumpheat::Error::from)?;
        let sidecar = json!({
            "grid": grid,
            "s": s,
            "t": t,
            "symbol": id,
            "which": kind.label(),
            "scale": snap.scale,
            "encoding": "f64-le-complex-interleaved",
        });
        io::write_json(&base.with_extension("json"), &sidecar)?;
    }
    let mut checks = Vec::new();
    if kind == KernelKind::P {
        checks.push(Check::at_most("mass deviation", (mass.re - 1.0).abs(), 1e-6));
    }
    let mut tables = vec![("kernel.csv".into(), snap.to_csv())];
    if grid.dim == 1 {
        let xs: Vec<f64> = (0..grid.points).map(|j| grid.coord(j)).collect();
        let ys: Vec<f64> = snap.values.iter().map(|v| v.re).collect();
        tables.push(("kernel.dat".into(), io::plot_data(&xs, &ys)));
    }
    Ok(Outcome {
        details: json!({
            "symbol": id,
            "which": kind.label(),
            "s": s,
            "t": t,
            "grid": grid,
            "scale": snap.scale,
            "mass_re": mass.re,
            "mass_im": mass.im,
            "max_re": snap.max_re(),
            "max_im": snap.max_im(),
        }),
        checks,
        tables,
    })
}

fn solve_cmd(cfg: &ExperimentConfig, out: Option<&Path>) -> Run<Outcome> {
    let (f, spec) = build_source(cfg, "1,8,256", 64)?;
    let id = cfg.symbol.as_deref().unwrap();
    let sym = symbol("symbol", id, f.grid().dim)?;
    let phi = phi_or_reference(cfg, &sym)?;
    let u = solve(&sym, &f)?;
    if let Some(o) = out {
        io::write_field(&o.join("source"), &f)?;
        io::write_field(&o.join("solution"), &u)?;
    }
    let ps = cfg.p.clone().unwrap_or_else(|| vec![2.0]);
    let norms = ps.iter().map(|&p| phi_potential_norm(&u, &phi, p, Some(&f))).collect::<jumpheat::Result<Vec<_>>>()?;
    let mut csv = String::from("p,lp,lp_phi,ratio\n");
    for (p, n) in ps.iter().zip(&norms) {
        csv.push_str(&format!("{p},{:e},{:e},{:e}\n", n.lp, n.lp_phi, n.ratio.unwrap_or(f64::NAN)));
    }
    Ok(Outcome {
        details: json!({
            "symbol": id,
            "source": spec,
            "grid": f.grid(),
            "steps": f.steps(),
            "t_end": f.t_end(),
            "max_abs": u.max_abs(),
            "max_imag": u.max_im(),
            "norms": norms,
        }),
        checks: Vec::new(),
        tables: vec![("norms.csv".into(), csv)],
    })
}

fn estimate(cfg: &ExperimentConfig) -> Run<Outcome> {
    let id = cfg.symbol.as_deref().unwrap();
    let sym = symbol("symbol", id, dim(cfg)?)?;
    let phi = phi_or_reference(cfg, &sym)?;
    let ladder = cfg.ladder.clone().unwrap_or_else(|| vec![64, 128, 256]);
    let half_extent = cfg.half_extent.unwrap_or(8.0);
    let coarsest = *ladder.iter().min().unwrap();
    let limit = ((coarsest / 2 - 1) as f64) * PI / half_extent;
    let hc = HarnessConfig {
        half_extent,
        ladder,
        steps: cfg.steps.unwrap_or(64),
        t_end: cfg.t_end.unwrap_or(1.0),
        ps: cfg.p.clone().unwrap_or_else(|| vec![2.0, 4.0]),
        family: SourceFamily { count: cfg.sources.unwrap_or(20), seed: cfg.seed.unwrap(), max_frequency: limit.min(8.0), modes: 6 },
    };
    let rep = estimate_ratio_harness(&sym, &phi, &hc)?;
    let mut checks = vec![Check::below("ladder spread", rep.ladder_spread, 2.0)];
    // per-mode Plancherel bound, valid when φ is the symbol's own scale function
    if cfg.phi.is_none() && hc.ps.contains(&2.0) {
        checks.push(Check::at_most("max ratio p=2", rep.max_for(2.0), 1.0 + 1e-3));
    }
    let max_ratio: Vec<Value> = rep.max_ratio.iter().map(|(p, m, r)| json!({ "p": p, "points": m, "max_ratio": r })).collect();
    Ok(Outcome {
        details: json!({
            "symbol": id,
            "phi": phi.label(),
            "harness": hc,
            "max_ratio": max_ratio,
            "ladder_spread": rep.ladder_spread,
        }),
        checks,
        tables: vec![("ratios.csv".into(), rep.to_csv())],
    })
}

fn mc_compare(cfg: &ExperimentConfig) -> Run<Outcome> {
    let (f, spec) = build_source(cfg, "1,8,512", 96)?;
    let d = f.grid().dim;
    let sym_id = cfg.symbol.as_deref().unwrap();
    let proc_id = cfg.process.as_deref().unwrap();
    let sym = symbol("symbol", sym_id, d)?;
    let process = jumpheat::stochastic::ProcessSpec::from_symbol(&symbol("process", proc_id, d)?)
        .map_err(|e| UsageError::new("process", e.to_string()))?;
    let t = cfg.t_end.unwrap();
    let pts = rows("points", cfg.points.as_ref().unwrap())?;
    let k = (t / f.dt()).round() as usize;
    let mc = mc_solution(&process, &f, t, &pts, cfg.paths.unwrap(), cfg.seed.unwrap())?;
    let u = solve(&sym, &f)?;
    let mut csv = String::new();
    for a in 0..d {
        csv.push_str(&format!("x{},", a + 1));
    }
    csv.push_str("value,standard_error,oracle,deviation\n");
    let mut worst = 0.0f64;
    for (i, x) in pts.iter().enumerate() {
        let oracle = interpolate(&u, k, x);
        let dev = (mc.values[i] - oracle).abs() / (3.0 * mc.standard_errors[i] + 1e-3);
        worst = worst.max(dev);
        for c in x {
            csv.push_str(&format!("{c},"));
        }
        csv.push_str(&format!("{:e},{:e},{:e},{:e}\n", mc.values[i], mc.standard_errors[i], oracle, dev));
    }
    Ok(Outcome {
        details: json!({
            "process": proc_id,
            "symbol": sym_id,
            "source": spec,
            "t": t,
            "paths": mc.paths,
            "points": pts.len(),
            "max_normalized_deviation": worst,
        }),
        checks: vec![Check::at_most("max deviation / (3 se + 1e-3)", worst, 1.0)],
        tables: vec![("compare.csv".into(), csv)],
    })
}

fn verify_cf_cmd(cfg: &ExperimentConfig) -> Run<Outcome> {
    let d = dim(cfg)?;
    let sym_id = cfg.symbol.as_deref().unwrap();
    let proc_id = cfg.process.as_deref().unwrap();
    let sym = symbol("symbol", sym_id, d)?;
    let process = jumpheat::stochastic::ProcessSpec::from_symbol(&symbol("process", proc_id, d)?)
        .map_err(|e| UsageError::new("process", e.to_string()))?;
    let pairs: Vec<(f64, f64)> = rows("pairs", cfg.pairs.as_ref().unwrap())?
        .into_iter()
        .map(|r| match r[..] {
            [s, t] if s >= 0.0 && s <= t => Ok((s, t)),
            _ => Err(UsageError::new("pairs", format!("expected rows 's t' with 0 <= s <= t, got {r:?}"))),
        })
        .collect::<Result<_, _>>()?;
    let xis = match &cfg.xis {
        Some(r) => rows("xis", r)?,
        None => (0..10)
            .map(|k| {
                let mut v = vec![0.0; d];
                v[0] = 0.1 * 1.45f64.powi(k);
                v
            })
            .collect(),
    };
    let rep = verify_cf(&process, &sym, &pairs, &xis, cfg.n.unwrap(), cfg.seed.unwrap())?;
    Ok(Outcome {
        details: json!({
            "process": proc_id,
            "symbol": sym_id,
            "samples": rep.samples,
            "points": rep.rows.len(),
            "fraction_within": rep.fraction_within,
            "max_deviation": rep.max_deviation,
        }),
        checks: vec![Check {
            name: "fraction within 3 n^-1/2".into(),
            value: rep.fraction_within,
            bound: 0.99,
            pass: rep.pass,
        }],
        tables: vec![("deviations.csv".into(), rep.to_csv())],
    })
}

fn maximal(cfg: &ExperimentConfig) -> Run<Outcome> {
    let phi_id = cfg.phi.as_deref().unwrap();
    let phi = registry::phi(phi_id)?;
    let d = dim(cfg)?;
    let [lo, hi] = cfg.levels.unwrap();
    let domain = cfg.domain.unwrap_or(Domain::Full);
    let (count, seed) = match &cfg.fields {
        Some(f) => parse_fields(f)?,
        None => (100, cfg.seed.unwrap()),
    };
    let filt = build_filtration(&phi, d, lo, hi, domain)?;
    let sigmas_ok = filt.levels.iter().all(|l| (1.0..2.0).contains(&l.sigma));
    let nesting = filt.check_nesting(8, 4);
    let worst_volume = ((lo + 1)..=hi).filter_map(|n| filt.volume_ratio(n)).fold(0.0, f64::max);
    let ps = cfg.p.clone().unwrap_or_else(|| vec![2.0, 4.0]);
    let rep = verify_fs_hl(&filt, &FsHlConfig::new(count, seed, ps))?;
    let mut checks = vec![
        Check { name: "sigma in [1,2)".into(), value: filt.levels.iter().map(|l| l.sigma).fold(0.0, f64::max), bound: 2.0, pass: sigmas_ok },
        Check::at_most("nesting failures", nesting as f64, 0.0),
        Check::at_most("parent/child volume ratio", worst_volume, filt.n0_bound * (1.0 + 1e-12)),
        Check::at_most("Fefferman-Stein violations", rep.fs_violations as f64, 0.0),
    ];
    for (p, c) in &rep.hl_relative_change {
        checks.push(Check::at_most(&format!("maximal ratio change p={p}"), *c, 0.2));
    }
    let mut fs = String::from("field,p,norm,sharp_norm,constant,ratio,violated\n");
    for r in &rep.fs_rows {
        fs.push_str(&format!("{},{},{:e},{:e},{:e},{:e},{}\n", r.field, r.p, r.norm, r.sharp_norm, r.constant, r.ratio, r.violated));
    }
    let mut hl = String::from("p,points,max_ratio,mean_ratio\n");
    for r in &rep.hl {
        hl.push_str(&format!("{},{},{:e},{:e}\n", r.p, r.points, r.max_ratio, r.mean_ratio));
    }
    let mut sig = String::from("n,sigma,time_length,side,ell\n");
    for l in &filt.levels {
        sig.push_str(&format!("{},{:e},{:e},{:e},{}\n", l.n, l.sigma, l.time_length, l.side, l.ell));
    }
    Ok(Outcome {
        details: json!({
            "phi": phi_id,
            "dim": d,
            "domain": domain,
            "fields": count,
            "levels": filt.levels,
            "n0": rep.n0,
            "n0_bound": filt.n0_bound,
            "c_tilde": filt.c_tilde,
            "nesting_failures": nesting,
            "region_level": rep.region_level,
            "finest_level": rep.finest_level,
            "exterior_levels": rep.exterior_levels,
            "constants": rep.constants,
            "fs_violations": rep.fs_violations,
            "max_fs_ratio": rep.max_fs_ratio,
            "hl": rep.hl,
            "hl_relative_change": rep.hl_relative_change,
        }),
        checks,
        tables: vec![("sigma.csv".into(), sig), ("fefferman_stein.csv".into(), fs), ("hardy_littlewood.csv".into(), hl)],
    })
}

type Pair = ((f64, Vec<f64>), (f64, Vec<f64>));

fn hormander(cfg: &ExperimentConfig) -> Run<Outcome> {
    let grid = grid_or(cfg, "1,24,512")?;
    let id = cfg.symbol.as_deref().unwrap();
    let sym = symbol("symbol", id, grid.dim)?;
    let psi = phi_or_reference(cfg, &sym)?;
    let d = grid.dim;
    let pairs: Vec<Pair> = match &cfg.pairs {
        Some(r) => rows("pairs", r)?
            .into_iter()
            .map(|row| {
                if row.len() != 2 * (d + 1) {
                    return Err(UsageError::new("pairs", format!("expected rows 't x.. s y..' of length {}", 2 * (d + 1))));
                }
                Ok(((row[0], row[1..=d].to_vec()), (row[d + 1], row[d + 2..].to_vec())))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap());
            (0..cfg.count.unwrap_or(10))
                .map(|_| {
                    let t = rng.random_range(0.5..1.5);
                    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
                    let s = rng.random_range(0.5..1.5);
                    let y: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
                    ((t, x), (s, y))
                })
                .collect()
        }
    };
    let mut base = HormanderConfig::new(grid.half_extent, grid.points);
    base.max_points = cfg.max_points.unwrap_or(1 << 13);
    if let Some(tol) = cfg.tail_tolerance {
        base.tail_tolerance = tol;
    }
    let wide = HormanderConfig { half_extent: 2.0 * base.half_extent, points: 2 * base.points, max_points: 2 * base.max_points, ..base.clone() };
    let (sup, vals) = hormander_sup(&sym, &psi, &pairs, &base)?;
    let (sup_wide, vals_wide) = hormander_sup(&sym, &psi, &pairs, &wide)?;
    let change = if sup > 0.0 { (sup_wide - sup).abs() / sup } else { 0.0 };
    let mut csv = String::from("pair,t,x,s,y,value,value_doubled,shell_fraction,unresolved_strip\n");
    for (i, (((t, x), (s, y)), (v, w))) in pairs.iter().zip(vals.iter().zip(&vals_wide)).enumerate() {
        let fmt = |p: &[f64]| p.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(" ");
        csv.push_str(&format!(
            "{i},{t:e},{},{s:e},{},{:e},{:e},{:e},{:e}\n",
            fmt(x),
            fmt(y),
            v.value,
            w.value,
            v.shell_fraction,
            v.unresolved_strip
        ));
    }
    Ok(Outcome {
        details: json!({
            "symbol": id,
            "psi": psi.label(),
            "pairs": pairs.len(),
            "c0": vals.first().map(|v| v.c0),
            "config": base,
            "sup": sup,
            "sup_doubled": sup_wide,
            "relative_change": change,
        }),
        checks: vec![Check::below("relative change under doubled truncation", change, 0.1)],
        tables: vec![("pairs.csv".into(), csv)],
    })
}
