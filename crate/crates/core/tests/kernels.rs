use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jumpheat::kernels::{
    compute_kernel, compute_scaled_kernels, estimate_c0_tilde, hormander_integral, hormander_sup, scaling_factor,
    tail_and_difference_estimates, verify_kernel_bounds, HormanderConfig, KernelKind, TailParams,
};
use jumpheat::registry;
use jumpheat::spectral::GridSpec;
use jumpheat::symbols::BernsteinSpec;
use jumpheat::Error;

#[test]
fn scaling_factors() {
    assert_relative_eq!(scaling_factor(&BernsteinSpec::linear(), 0.25).unwrap(), 2.0, max_relative = 1e-12);
    let st = BernsteinSpec::stable(0.5).unwrap();
    assert_relative_eq!(scaling_factor(&st, 1.0).unwrap(), 1.0, max_relative = 1e-12);
    assert_relative_eq!(scaling_factor(&st, 1.0 / 16.0).unwrap(), 16.0, max_relative = 1e-12);
    assert!(scaling_factor(&st, 0.0).is_err());
}

#[test]
fn c0_tilde_for_parabolic_scaling() {
    // √(t+s) ≤ √t + √s with equality in the limit
    assert_relative_eq!(estimate_c0_tilde(&BernsteinSpec::linear()).unwrap(), 1.0, max_relative = 1e-9);
}

#[test]
fn cauchy_kernel_matches_periodized_poisson_kernel() {
    let sym = registry::symbol("frac-1.0", 1).unwrap();
    let l = 16.0;
    let grid = GridSpec::new(1, l, 1024).unwrap();
    let p = compute_kernel(&sym, sym.reference(), 0.0, 1.0, &grid, KernelKind::P).unwrap();
    // Σ_k 1/(π(1 + (x + 2kL)²)) in closed form
    let a = PI / l;
    let periodic = |x: f64| a.sinh() / (2.0 * l * (a.cosh() - (a * x).cos()));
    let cauchy = |x: f64| 1.0 / (PI * (1.0 + x * x));
    for j in 0..grid.points {
        let x = grid.coord(j);
        if x.abs() <= l / 4.0 {
            assert_relative_eq!(p.values[j].re, periodic(x), max_relative = 1e-3);
            if x.abs() <= 1.0 {
                assert_relative_eq!(p.values[j].re, cauchy(x), max_relative = 1e-2);
            }
        }
    }
    assert!(p.max_im() <= 1e-12 * p.max_abs());
}

#[test]
fn heat_q1_is_self_similar() {
    let heat = registry::symbol("heat", 1).unwrap();
    let psi = BernsteinSpec::linear();
    let grid = GridSpec::new(1, 12.0, 256).unwrap();
    let a = compute_kernel(&heat, &psi, 0.0, 1.0, &grid, KernelKind::Q1).unwrap();
    let b = compute_kernel(&heat, &psi, 0.0, 4.0, &grid, KernelKind::Q1).unwrap();
    let scale = a.max_abs();
    for (u, v) in a.values.iter().zip(&b.values) {
        assert!((u - v).norm() <= 1e-8 * scale);
    }
}

#[test]
fn q1_sup_is_uniform_for_homogeneous_symbols() {
    let sym = registry::symbol("frac-1.5", 1).unwrap();
    let grid = GridSpec::new(1, 16.0, 512).unwrap();
    let base = compute_kernel(&sym, sym.reference(), 0.0, 1.0, &grid, KernelKind::Q1).unwrap().max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let s = rng.random_range(0.0..3.0);
        let t = s + rng.random_range(0.01..3.0);
        let v = compute_kernel(&sym, sym.reference(), s, t, &grid, KernelKind::Q1).unwrap().max_abs();
        assert!((v - base).abs() <= 0.05 * base, "{v} vs {base} at ({s}, {t})");
    }
}

/// `Σ_m a[m] b[j-m] h`, circular, computed directly.
fn circular_convolution(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|m| a[m] * b[(j + n - m) % n]).sum::<f64>() * h).collect()
}

#[test]
fn chapman_kolmogorov() {
    for id in ["heat", "frac-1.5", "ex2.3-sbm-alpha05-sigma12"] {
        let sym = registry::symbol(id, 1).unwrap();
        let grid = GridSpec::new(1, 16.0, 1024).unwrap();
        let k = |s: f64, t: f64| -> Vec<f64> {
            compute_kernel(&sym, sym.reference(), s, t, &grid, KernelKind::P).unwrap().values.iter().map(|c| c.re).collect()
        };
        // kernels of the grid are centred at the index of x = 0
        let centre = grid.nearest(0.0);
        let shift = |v: Vec<f64>| -> Vec<f64> { (0..v.len()).map(|j| v[(j + centre) % v.len()]).collect() };
        let (s, r, t) = (0.5, 1.2, 2.0);
        let left = shift(k(s, r));
        let right = shift(k(r, t));
        let whole = shift(k(s, t));
        let conv = circular_convolution(&left, &right, grid.step());
        let scale = whole.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = conv.iter().zip(&whole).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-6 * scale.max(1.0), "{id}: {err}");
    }
}

#[test]
fn radial_kernels_are_even() {
    let sym = registry::symbol("ex2.4-clock", 1).unwrap();
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let ks = compute_scaled_kernels(&sym, sym.reference(), 0.2, 1.4, &grid).unwrap();
    for kind in [KernelKind::P, KernelKind::PsiDeltaP] {
        let k = compute_kernel(&sym, sym.reference(), 0.2, 1.4, &grid, kind).unwrap();
        check_even(&k.values, &grid);
    }
    check_even(&ks.q1.values, &grid);
    check_even(&ks.q3.values, &grid);
}

fn check_even(v: &[num_complex::Complex64], grid: &GridSpec) {
    let max = v.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let c = grid.nearest(0.0);
    let n = grid.points;
    for j in 0..n {
        let mirror = (2 * c + n - j) % n;
        assert!((v[j] - v[mirror]).norm() <= 1e-10 * max);
    }
}

#[test]
fn kernel_bounds() {
    let frac = registry::symbol("frac-1.5", 1).unwrap();
    let rep = verify_kernel_bounds(&frac, frac.reference(), &[(0.0, 1.0), (0.4, 0.6)], &GridSpec::new(1, 32.0, 1024).unwrap(), 0.2)
        .unwrap();
    assert!(rep.pass, "{:?}", rep.violations);
    assert!(rep.rows.iter().all(|r| r.weighted.is_finite() && r.sup.is_finite()));

    let heat = registry::symbol("heat", 1).unwrap();
    let rep = verify_kernel_bounds(&heat, heat.reference(), &[(0.0, 1.0)], &GridSpec::new(1, 16.0, 256).unwrap(), 0.3).unwrap();
    let q3 = rep.rows.iter().find(|r| r.kernel == "q3").unwrap();
    assert!(q3.weighted.is_finite() && q3.weighted > 0.0);

    let err = verify_kernel_bounds(&frac, frac.reference(), &[(0.0, 1.0)], &GridSpec::new(1, 16.0, 256).unwrap(), 0.8).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

fn tails(c_values: Vec<f64>, t: f64, shift: f64) -> jumpheat::kernels::TailReport {
    let heat = registry::symbol("heat", 1).unwrap();
    let params = TailParams { s: 0.5, t, a: 0.25, c_values, shift: vec![shift], delta: None };
    tail_and_difference_estimates(&heat, heat.reference(), &params, &GridSpec::new(1, 16.0, 256).unwrap()).unwrap()
}

#[test]
fn tail_estimates() {
    let rep = tails(vec![1.0, 2.0, 4.0, 8.0], 1.0, 0.1);
    assert!(rep.decay_ok, "{:?}", rep.tail);
    assert!(rep.tail.windows(2).all(|w| w[1].1.lhs <= w[0].1.lhs));

    // translation difference is linear in |h|
    let half = tails(vec![1.0], 1.0, 0.05);
    let r = rep.translation.lhs / half.translation.lhs;
    assert!((r - 2.0).abs() < 0.05, "{r}");

    // time difference is linear in t - s
    let near = tails(vec![1.0], 0.52, 0.1);
    let nearer = tails(vec![1.0], 0.51, 0.1);
    let r = near.time_difference.lhs / nearer.time_difference.lhs;
    assert!((r - 2.0).abs() < 0.1, "{r}");
}

#[test]
fn tail_preconditions() {
    let heat = registry::symbol("heat", 1).unwrap();
    let grid = GridSpec::new(1, 16.0, 256).unwrap();
    let bad = TailParams { s: 1.0, t: 0.5, a: 0.25, c_values: vec![1.0], shift: vec![0.1], delta: None };
    assert!(matches!(tail_and_difference_estimates(&heat, heat.reference(), &bad, &grid), Err(Error::Precondition(_))));
}

#[test]
fn hormander_vanishes_on_the_diagonal() {
    let heat = registry::symbol("heat", 1).unwrap();
    let v = hormander_integral(&heat, &BernsteinSpec::linear(), (1.0, &[0.2]), (1.0, &[0.2]), &HormanderConfig::new(8.0, 128)).unwrap();
    assert_eq!(v.value, 0.0);
}

#[test]
fn hormander_truncation_error_suggests_larger_box() {
    let heat = registry::symbol("heat", 1).unwrap();
    let err = hormander_integral(&heat, &BernsteinSpec::linear(), (1.0, &[0.0]), (0.7, &[0.3]), &HormanderConfig::new(4.0, 128))
        .unwrap_err();
    assert!(matches!(err, Error::Truncation { suggested } if suggested == 8.0));
}

#[test]
fn hormander_sup_for_fractional_symbol_is_finite() {
    let sym = registry::symbol("frac-1.5", 1).unwrap();
    let pairs = vec![((1.0, vec![0.0]), (0.8, vec![0.1])), ((1.2, vec![0.3]), (1.0, vec![-0.2]))];
    // heavy tails: only ask that the outer half of the box carries a small share
    let cfg = HormanderConfig { tail_tolerance: f64::INFINITY, max_points: 1 << 12, ..HormanderConfig::new(32.0, 512) };
    let (sup, vals) = hormander_sup(&sym, sym.reference(), &pairs, &cfg).unwrap();
    assert!(sup.is_finite() && sup > 0.0);
    assert!(vals.iter().all(|v| v.shell_fraction < 0.1), "{vals:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernels_carry_unit_mass(k in 0usize..4, s in 0.0f64..2.0, d in 0.3f64..2.0) {
        let id = ["heat", "frac-1.5", "ex2.4-clock", "ex2.5-sum-poisson"][k];
        let sym = registry::symbol(id, 1).unwrap();
        let grid = GridSpec::new(1, 16.0, 4096).unwrap();
        let p = compute_kernel(&sym, sym.reference(), s, s + d, &grid, KernelKind::P).unwrap();
        prop_assert!((p.mass() - 1.0).norm() <= 1e-6);
    }

    #[test]
    fn scaling_identity(s in 0.0f64..2.0, d in 0.05f64..2.0) {
        let sym = registry::symbol("ex2.3-sbm-alpha05-sigma12", 1).unwrap();
        let psi = sym.reference().clone();
        let t = s + d;
        let gq = GridSpec::new(1, 16.0, 1024).unwrap();
        let q1 = compute_kernel(&sym, &psi, s, t, &gq, KernelKind::Q1).unwrap();
        let a = q1.scale;
        let gp = GridSpec::new(1, 16.0 / a, 1024).unwrap();
        let pd = compute_kernel(&sym, &psi, s, t, &gp, KernelKind::PsiDeltaP).unwrap();
        let max = q1.max_abs();
        for (u, v) in q1.values.iter().zip(&pd.values) {
            prop_assert!((u.re - d / a * v.re).abs() <= 1e-8 * max);
        }
    }
}
