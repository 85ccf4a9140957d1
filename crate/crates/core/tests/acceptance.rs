//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL` line with the measured quantities.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jumpheat::kernels::{
    compute_kernel, hormander_sup, inverse_sandwich, scaled_symbol_sandwich, verify_kernel_bounds,
    HormanderConfig, KernelKind,
};
use jumpheat::maximal::{build_filtration, verify_fs_hl, Domain, FsHlConfig};
use jumpheat::registry;
use jumpheat::solver::{
    bump_family, estimate_ratio_harness, solve, weak_residual, HarnessConfig, SourceFamily, SpaceTimeField,
};
use jumpheat::spectral::GridSpec;
use jumpheat::stochastic::{mc_solution, verify_cf, PrincipalProcess, ProcessSpec};
use jumpheat::symbols::{verify_symbol_conditions, BernsteinKind, BernsteinSpec, PiecewiseConstant, SymbolAuditConfig, SymbolSpec};

fn report(n: usize, name: &str, pass: bool, started: Instant, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} [{name}] {detail} ({:.1}s)", started.elapsed().as_secs_f64());
}

fn rel_max_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn re(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|c| c.re).collect()
}

#[test]
fn criterion_1_characteristic_functions() {
    let started = Instant::now();
    let ids = ["ex2.3-sbm-alpha05-sigma12", "ex2.3-sbm-alpha075-sigma12", "ex2.4-clock", "ex2.4-clock-alpha075"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs: Vec<(f64, f64)> = (0..20)
        .map(|_| {
            let s = rng.random_range(0.0..1.8);
            (s, s + rng.random_range(0.05..1.0))
        })
        .collect();
    let xis: Vec<Vec<f64>> = (0..10).map(|k| vec![0.1 * 1.45f64.powi(k)]).collect();
    let mut worst = 1.0f64;
    let mut details = Vec::new();
    for id in ids {
        let sym = registry::symbol(id, 1).unwrap();
        let proc_ = registry::process(id, 1).unwrap();
        let rep = verify_cf(&proc_, &sym, &pairs, &xis, 100_000, 2024).unwrap();
        assert_eq!(rep.rows.len(), 200);
        // also against each row's own standard error, which is at most n^{-1/2}
        let strict = rep
            .rows
            .iter()
            .filter(|r| {
                let d = Complex64::new(r.empirical_re - r.exact_re, r.empirical_im - r.exact_im).norm();
                d <= 3.0 * r.standard_error + 1e-12
            })
            .count() as f64
            / rep.rows.len() as f64;
        worst = worst.min(rep.fraction_within).min(strict);
        details.push(format!("{id}: {:.3}/{strict:.3}", rep.fraction_within));
    }
    let pass = worst >= 0.99 && started.elapsed().as_secs() <= 120;
    report(1, "characteristic functions", pass, started, details.join(", "));
    assert!(pass);
}

#[test]
fn criterion_2_monte_carlo_vs_spectral() {
    let started = Instant::now();
    let id = "ex2.3-sbm-alpha075-sigma12";
    let sym = registry::symbol(id, 1).unwrap();
    let proc_ = registry::process(id, 1).unwrap();
    let grid = GridSpec::new(1, 8.0, 512).unwrap();
    let t_end = 1.5;
    let f = SpaceTimeField::from_fn(grid, t_end, 96, |t, x| (1.0 + 0.5 * t) * (-x[0] * x[0]).exp()).unwrap();
    let u = solve(&sym, &f).unwrap();
    let points: Vec<Vec<f64>> = (0..16).map(|i| vec![-3.0 + 0.4 * i as f64]).collect();
    let mc = mc_solution(&proc_, &f, t_end, &points, 100_000, 77).unwrap();
    let k = f.steps();
    let mut worst = 0.0f64;
    for (p, x) in points.iter().enumerate() {
        let spectral = jumpheat::stochastic::interpolate(&u, k, x);
        let allowed = 3.0 * mc.standard_errors[p] + 1e-3;
        worst = worst.max((mc.values[p] - spectral).abs() / allowed);
    }
    let pass = worst <= 1.0 && started.elapsed().as_secs() <= 300;
    report(2, "Monte Carlo vs spectral", pass, started, format!("max |mc - spectral| / (3 se + 1e-3) = {worst:.3}"));
    assert!(pass);
}

#[test]
fn criterion_3_estimate_harness() {
    let started = Instant::now();
    let family = SourceFamily { count: 20, seed: 5, max_frequency: 8.0, modes: 6 };
    let cfg = HarnessConfig { half_extent: 8.0, ladder: vec![64, 128, 256], steps: 64, t_end: 1.0, ps: vec![2.0, 4.0], family };
    let mut spreads = Vec::new();
    let mut pass = true;
    for id in ["frac-1.0", "frac-1.5", "clock-frac-1.5"] {
        let sym = registry::symbol(id, 1).unwrap();
        let rep = estimate_ratio_harness(&sym, sym.reference(), &cfg).unwrap();
        pass &= rep.ladder_spread < 2.0;
        spreads.push(format!("{id}: spread {:.4}", rep.ladder_spread));
    }
    let heat = registry::symbol("heat", 1).unwrap();
    let heat_cfg = HarnessConfig { ps: vec![2.0], ..cfg };
    let rep = estimate_ratio_harness(&heat, heat.reference(), &heat_cfg).unwrap();
    let heat_max = rep.max_for(2.0);
    pass &= heat_max <= 1.0 + 1e-3;
    report(3, "a-priori estimate harness", pass, started, format!("{}, heat p=2 max ratio {heat_max:.6}", spreads.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_4_kernel_lemmas() {
    let started = Instant::now();
    let heat = registry::symbol("heat", 1).unwrap();
    let linear = BernsteinSpec::linear();

    // (a) heat kernel against the Gaussian with variance 2
    let grid = GridSpec::new(1, 16.0, 256).unwrap();
    let p = compute_kernel(&heat, &linear, 0.0, 1.0, &grid, KernelKind::P).unwrap();
    let exact: Vec<f64> = (0..grid.points).map(|j| {
        let x = grid.coord(j);
        (-x * x / 4.0).exp() / (4.0 * PI).sqrt()
    }).collect();
    let inner: Vec<usize> = (0..grid.points).filter(|&j| grid.coord(j).abs() <= grid.half_extent / 2.0).collect();
    let a_err = rel_max_err(
        &inner.iter().map(|&j| p.values[j].re).collect::<Vec<_>>(),
        &inner.iter().map(|&j| exact[j]).collect::<Vec<_>>(),
    );
    let a_ok = a_err <= 1e-6;

    // (b) unit mass of every transition kernel
    let mut b_err = 0.0f64;
    for id in ["heat", "frac-1.0", "frac-1.5", "clock-frac-1.5", "ex2.3-sbm-alpha05-sigma12", "ex2.4-clock", "ex2.5-sum-poisson"] {
        let sym = registry::symbol(id, 1).unwrap();
        let g = GridSpec::new(1, 16.0, 2048).unwrap();
        for &(s, t) in &[(0.0, 1.0), (0.5, 2.0)] {
            let k = compute_kernel(&sym, sym.reference(), s, t, &g, KernelKind::P).unwrap();
            b_err = b_err.max((k.mass() - 1.0).norm());
        }
    }
    let b_ok = b_err <= 1e-6;

    // (c) q1(x) = (t-s) a^{-d} [ψ(Δ)p](a^{-1}x), the right side on the rescaled box
    let frac = registry::symbol("frac-1.5", 1).unwrap();
    let psi = frac.reference().clone();
    let (s, t) = (0.2, 0.7);
    let gq = GridSpec::new(1, 16.0, 512).unwrap();
    let q1 = compute_kernel(&frac, &psi, s, t, &gq, KernelKind::Q1).unwrap();
    let a = q1.scale;
    let gp = GridSpec::new(1, 16.0 / a, 512).unwrap();
    let pd = compute_kernel(&frac, &psi, s, t, &gp, KernelKind::PsiDeltaP).unwrap();
    let rhs: Vec<f64> = pd.values.iter().map(|v| (t - s) / a * v.re).collect();
    let c_err = rel_max_err(&re(&q1.values), &rhs);
    let c_ok = c_err <= 1e-8;

    // (d) weighted norms of q1, q2, q3 stable under doubling L and M
    let mut d_change = 0.0f64;
    let mut d_ok = true;
    for id in ["frac-1.5", "heat"] {
        let sym = registry::symbol(id, 1).unwrap();
        let rep = verify_kernel_bounds(&sym, sym.reference(), &[(0.0, 1.0), (0.3, 0.5), (1.0, 3.0)], &GridSpec::new(1, 32.0, 1024).unwrap(), 0.2)
            .unwrap();
        d_ok &= rep.pass;
        d_change = d_change.max(rep.max_relative_change);
    }

    // (e) Hörmander supremum over 50 random pairs under doubled truncation
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<((f64, Vec<f64>), (f64, Vec<f64>))> = (0..50)
        .map(|_| {
            let t = rng.random_range(0.5..1.5);
            let s = rng.random_range(0.5..1.5);
            ((t, vec![rng.random_range(-0.5..0.5)]), (s, vec![rng.random_range(-0.5..0.5)]))
        })
        .collect();
    let base = HormanderConfig { max_points: 1 << 13, ..HormanderConfig::new(24.0, 512) };
    let (sup1, _) = hormander_sup(&heat, &linear, &pairs, &base).unwrap();
    let wide = HormanderConfig { half_extent: 48.0, points: 1024, ..base };
    let (sup2, _) = hormander_sup(&heat, &linear, &pairs, &wide).unwrap();
    let e_change = (sup2 - sup1).abs() / sup1;
    let e_ok = sup1.is_finite() && e_change < 0.1;

    let pass = a_ok && b_ok && c_ok && d_ok && e_ok;
    report(
        4,
        "kernel lemmas",
        pass,
        started,
        format!(
            "(a) {a_err:.2e} (b) {b_err:.2e} (c) {c_err:.2e} (d) max change {d_change:.3} (e) sup {sup1:.4} -> {sup2:.4}, change {e_change:.2e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_sandwiches() {
    let started = Instant::now();
    let psis = [
        BernsteinSpec::stable(0.5).unwrap(),
        BernsteinSpec::stable(0.75).unwrap(),
        BernsteinSpec::linear(),
        BernsteinSpec::new(BernsteinKind::SumStable { beta: 0.3, alpha: 0.7 }).unwrap(),
        BernsteinSpec::new(BernsteinKind::LogPlus { alpha: 0.5, beta: 0.25 }).unwrap(),
        BernsteinSpec::new(BernsteinKind::LogMinus { alpha: 0.6, beta: 0.2 }).unwrap(),
        BernsteinSpec::new(BernsteinKind::Relativistic { alpha: 0.5, m: 1.0 }).unwrap(),
    ];
    let mut violations = 0;
    let mut parts = Vec::new();
    for psi in &psis {
        let inv = inverse_sandwich(psi, 1e-6, 1e6, 200).unwrap();
        let sc = scaled_symbol_sandwich(psi, (1e-3, 1e3), (1e-3, 1e3), 33).unwrap();
        assert_eq!(sc.checked_points, 32 * 32);
        violations += inv.violations + sc.violations;
        parts.push(format!("{}: N={:.3}/{:.3}", psi.label(), inv.fitted_n, sc.fitted_n));
    }
    let pass = violations == 0;
    report(5, "sandwich properties", pass, started, format!("violations {violations}; {}", parts.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_6_appendix_machinery() {
    let started = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ["r", "r^0.5", "r^1.5", "r^2"] {
        let phi = registry::phi(id).unwrap();
        let filt = build_filtration(&phi, 1, -4, 8, Domain::Full).unwrap();
        let sigmas_ok = filt.levels.iter().all(|l| (1.0..2.0).contains(&l.sigma));
        let nesting = filt.check_nesting(8, 4);
        let ratio_ok = (-3..=8).all(|n| filt.volume_ratio(n).unwrap() <= filt.n0_bound * (1.0 + 1e-12));
        let rep = verify_fs_hl(&filt, &FsHlConfig::new(100, 9, vec![2.0, 4.0])).unwrap();
        let ok = sigmas_ok && nesting == 0 && ratio_ok && rep.fs_violations == 0 && rep.hl_stable;
        pass &= ok;
        let hl: Vec<String> = rep.hl_relative_change.iter().map(|(p, c)| format!("p={p}: {c:.3}")).collect();
        parts.push(format!(
            "{id}: N0={} fs_violations={} max ||f||/||f#||={:.2} hl_change [{}]",
            filt.n0,
            rep.fs_violations,
            rep.max_fs_ratio.iter().map(|r| r.1).fold(0.0, f64::max),
            hl.join(" ")
        ));
    }
    let pass = pass && started.elapsed().as_secs() <= 120;
    report(6, "appendix machinery", pass, started, parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_7_negative_controls() {
    let started = Instant::now();
    let aniso = registry::symbol("remark-anisotropic", 2).unwrap();
    let audit = verify_symbol_conditions(&aniso, &SymbolAuditConfig::for_symbol(&aniso, 1.0)).unwrap();
    let audit_fails = !audit.summary.pass;

    let sym = registry::symbol("ex2.3-sbm-alpha075", 1).unwrap();
    let wrong = ProcessSpec::new(1, PrincipalProcess::SbmModulated { alpha: 0.5, sigma: PiecewiseConstant::constant(1.0) }, None).unwrap();
    let pairs = [(0.0, 1.0), (0.5, 1.5)];
    let xis: Vec<Vec<f64>> = (1..=5).map(|k| vec![0.4 * k as f64]).collect();
    let cf = verify_cf(&wrong, &sym, &pairs, &xis, 20_000, 1).unwrap();
    let cf_fails = !cf.pass;

    let heat = registry::symbol("heat", 1).unwrap();
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let f = SpaceTimeField::from_fn(grid, 1.0, 256, |t, x| (1.0 + t) * (-(x[0] - 0.5).powi(2)).exp()).unwrap();
    let u = solve(&heat, &f).unwrap();
    let tests = bump_family(1, 8.0, 1.0, 4);
    let base = weak_residual(&u, &f, &heat, &tests).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let amp = 0.01 * u.max_abs();
    let noisy: Vec<Complex64> = u.values().iter().map(|v| v + amp * rng.random_range(-1.0..1.0)).collect();
    let un = SpaceTimeField::new(grid, 1.0, 256, noisy).unwrap();
    let perturbed = weak_residual(&un, &f, &heat, &tests).unwrap();
    let inflation = perturbed / base;

    let pass = audit_fails && cf_fails && inflation >= 10.0;
    report(
        7,
        "negative controls",
        pass,
        started,
        format!(
            "anisotropic audit pass={} ({:?}); mismatched cf within={:.3} max dev {:.1}; residual {base:.2e} -> {perturbed:.2e} (x{inflation:.1})",
            audit.summary.pass,
            audit.summary.violations.first(),
            cf.fraction_within,
            cf.max_deviation
        ),
    );
    assert!(pass);
}

/// `∫₀ᵗ e^{-λ(t-s)}(1 + sin(ωs)) ds`
fn single_mode_exact(lambda: f64, omega: f64, t: f64) -> f64 {
    let e = (-lambda * t).exp();
    (1.0 - e) / lambda + (lambda * (omega * t).sin() - omega * (omega * t).cos() + omega * e) / (lambda * lambda + omega * omega)
}

#[test]
fn criterion_8_solver_correctness() {
    let started = Instant::now();
    let sym = registry::symbol("frac-1.5", 1).unwrap();
    let l = 4.0;
    let grid = GridSpec::new(1, l, 32).unwrap();
    let k0 = 3.0 * PI / l;
    let lambda = k0.powf(1.5);
    let omega = 3.0;
    let t_end = 1.0;
    let mut errs = Vec::new();
    for steps in [32usize, 64, 128, 256, 512, 1024] {
        let f = SpaceTimeField::from_fn(grid, t_end, steps, |t, x| (1.0 + (omega * t).sin()) * (k0 * x[0]).cos()).unwrap();
        let u = solve(&sym, &f).unwrap();
        let mut err = 0.0f64;
        for k in 0..=steps {
            let t = u.time(k);
            let g = single_mode_exact(lambda, omega, t);
            for (j, v) in u.level(k).iter().enumerate() {
                err = err.max((v.re - g * (k0 * grid.coord(j)).cos()).abs());
            }
        }
        errs.push(err);
    }
    let orders: Vec<f64> = errs.windows(2).take(3).map(|w| (w[0] / w[1]).log2()).collect();
    let order_ok = orders.iter().all(|o| *o >= 1.9);
    let finest_ok = *errs.last().unwrap() <= 1e-6;

    // linearity and causality on a richer field
    let g2 = GridSpec::new(1, 8.0, 128).unwrap();
    let fa = SpaceTimeField::from_fn(g2, 1.0, 64, |t, x| (-(x[0] - 1.0).powi(2)).exp() * (1.0 + t)).unwrap();
    let fb = SpaceTimeField::from_fn(g2, 1.0, 64, |t, x| if t > 0.5 { (2.0 * x[0]).sin() * t } else { 0.0 }).unwrap();
    let ua = solve(&sym, &fa).unwrap();
    let ub = solve(&sym, &fb).unwrap();
    let uab = solve(&sym, &fa.combine(2.0, &fb, -3.0).unwrap()).unwrap();
    let lin = ua.combine(2.0, &ub, -3.0).unwrap();
    let scale = uab.max_abs();
    let lin_err = uab.values().iter().zip(lin.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / scale;
    let causal_err = (0..=32).map(|k| ub.level(k).iter().fold(0.0f64, |m, v| m.max(v.norm()))).fold(0.0, f64::max);
    let lin_ok = lin_err <= 1e-10 && causal_err <= 1e-10 * ub.max_abs();

    let pass = order_ok && finest_ok && lin_ok;
    report(
        8,
        "solver correctness",
        pass,
        started,
        format!(
            "errors {:?}, orders {:?}, linearity {lin_err:.1e}, causality {causal_err:.1e}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}

#[test]
fn registry_symbols_are_consistent() {
    // guard for the ids used above
    for id in registry::SYMBOL_IDS {
        let s: SymbolSpec = registry::symbol(id, if *id == "remark-anisotropic" { 2 } else { 1 }).unwrap();
        assert_eq!(s.accumulate(0.3, 0.3, &vec![1.0; s.dim()]).unwrap(), Complex64::new(0.0, 0.0));
    }
}
