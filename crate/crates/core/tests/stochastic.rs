use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc_inv;

use jumpheat::registry;
use jumpheat::solver::SpaceTimeField;
use jumpheat::spectral::GridSpec;
use jumpheat::stochastic::{
    empirical_cf, mc_solution, path_rngs, sample_increment, sample_path, sample_principal, sample_stable_subordinator,
    shift_field, verify_cf, PrincipalProcess, ProcessSpec,
};
use jumpheat::symbols::{BernsteinSpec, PiecewiseConstant, SecondPart, SymbolSpec};
use jumpheat::Error;

fn sbm(alpha: f64, sigma: PiecewiseConstant, second: Option<SecondPart>) -> ProcessSpec {
    ProcessSpec::new(1, PrincipalProcess::SbmModulated { alpha, sigma }, second).unwrap()
}

fn increments(spec: &ProcessSpec, s: f64, t: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let (mut a, mut b) = path_rngs(seed, i as u64);
            sample_increment(spec, s, t, &mut a, &mut b).unwrap()
        })
        .collect()
}

#[test]
fn subordinator_laplace_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| (-sample_stable_subordinator(0.5, 0.7, &mut rng)).exp()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!((mean - (-0.7f64).exp()).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn half_stable_median_matches_levy_law() {
    // Laplace transform e^{-Δ√λ} is the Lévy law with scale c = Δ²/2,
    // whose median is c / (2 erfc⁻¹(1/2)²)
    let dt = 0.7;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut draws: Vec<f64> = (0..200_001).map(|_| sample_stable_subordinator(0.5, dt, &mut rng)).collect();
    draws.sort_by(f64::total_cmp);
    let median = draws[draws.len() / 2];
    let c = dt * dt / 2.0;
    let expected = c / (2.0 * erfc_inv(0.5).powi(2));
    assert!((median / expected - 1.0).abs() <= 0.01, "{median} vs {expected}");
}

#[test]
fn short_subordinator_steps_are_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mean = |dt: f64, rng: &mut ChaCha8Rng| (0..20_000).map(|_| sample_stable_subordinator(0.75, dt, rng).min(1.0)).sum::<f64>() / 20_000.0;
    let (a, b) = (mean(1e-2, &mut rng), mean(1e-4, &mut rng));
    assert!(b < a && b < 1e-3, "{a} {b}");
    assert_eq!(sample_stable_subordinator(0.5, 0.0, &mut rng), 0.0);
}

#[test]
fn zero_modulation_gives_zero_increment() {
    let spec = sbm(0.5, PiecewiseConstant::constant(0.0), None);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut out = vec![0.0];
    sample_principal(&spec, 0.0, 3.0, &mut out, &mut rng);
    assert_eq!(out, vec![0.0]);
}

#[test]
fn drift_shifts_the_median() {
    // X¹ is symmetric, so X_t - X_s - (t - s) is positive with probability ½
    let drift = SecondPart::Drift { direction: vec![1.0], speed: PiecewiseConstant::constant(1.0) };
    let spec = sbm(0.75, PiecewiseConstant::constant(1.0), Some(drift));
    let n = 40_000;
    let above = increments(&spec, 0.3, 1.1, n, 5).iter().filter(|v| v[0] - 0.8 > 0.0).count() as f64;
    assert!((above - n as f64 / 2.0).abs() <= 3.0 * (n as f64).sqrt() / 2.0, "{above}");
}

#[test]
fn empirical_cf_vectors() {
    let spec = sbm(0.5, PiecewiseConstant::constant(1.0), None);
    let n = 100_000;
    let samples = increments(&spec, 0.0, 1.0, n, 6);
    let (m, _) = empirical_cf(&samples, &[0.0]).unwrap();
    assert_eq!(m, Complex64::new(1.0, 0.0));
    let bound = 3.0 / (n as f64).sqrt();
    let (m, se) = empirical_cf(&samples, &[1.0]).unwrap();
    assert!((m - (-1.0f64).exp()).norm() <= bound);
    assert!(se <= 1.0 / (n as f64).sqrt());

    let two = sbm(0.5, PiecewiseConstant::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap(), None);
    let samples = increments(&two, 0.0, 2.0, n, 7);
    let (m, _) = empirical_cf(&samples, &[1.0]).unwrap();
    assert!((m - (-3.0f64).exp()).norm() <= bound);

    assert!(matches!(empirical_cf(&samples[..100], &[1.0]), Err(Error::TooFewSamples { .. })));
}

#[test]
fn cf_verification() {
    let sym = SymbolSpec::sbm(1, BernsteinSpec::stable(0.5).unwrap(), PiecewiseConstant::constant(1.0)).unwrap();
    let xis: Vec<Vec<f64>> = (1..=4).map(|k| vec![0.5 * k as f64]).collect();
    let pairs = [(0.0, 1.0), (0.5, 0.9), (1.0, 1.0)];
    let ok = verify_cf(&sbm(0.5, PiecewiseConstant::constant(1.0), None), &sym, &pairs, &xis, 20_000, 8).unwrap();
    assert!(ok.pass);
    // s = t: the zero increment
    assert!(ok.rows.iter().filter(|r| r.s == r.t).all(|r| r.empirical_re == 1.0 && r.empirical_im == 0.0));

    let bad = verify_cf(&sbm(0.9, PiecewiseConstant::constant(1.0), None), &sym, &pairs, &xis, 20_000, 8).unwrap();
    assert!(!bad.pass && bad.max_deviation > 5.0);

    let sym2 = SymbolSpec::sbm(2, BernsteinSpec::stable(0.5).unwrap(), PiecewiseConstant::constant(1.0)).unwrap();
    let err = verify_cf(&sbm(0.5, PiecewiseConstant::constant(1.0), None), &sym2, &pairs, &xis, 20_000, 8).unwrap_err();
    assert!(matches!(err, Error::Configuration(_)));
}

#[test]
fn mc_trivial_sources() {
    let spec = ProcessSpec::from_symbol(&registry::symbol("ex2.4-clock", 1).unwrap()).unwrap();
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    let pts = vec![vec![0.0], vec![1.5]];
    let zero = SpaceTimeField::zeros(grid, 1.0, 10).unwrap();
    let r = mc_solution(&spec, &zero, 1.0, &pts, 100, 1).unwrap();
    assert_eq!(r.values, vec![0.0, 0.0]);

    let one = SpaceTimeField::from_fn(grid, 1.0, 10, |_, _| 1.0).unwrap();
    let r = mc_solution(&spec, &one, 0.6, &pts, 100, 1).unwrap();
    for (v, se) in r.values.iter().zip(&r.standard_errors) {
        assert!((v - 0.6).abs() <= 1e-12 && *se <= 1e-12);
    }

    assert!(matches!(mc_solution(&spec, &one, 0.65, &pts, 100, 1), Err(Error::Configuration(_))));
    assert!(matches!(mc_solution(&spec, &one, 0.6, &[vec![9.0]], 100, 1), Err(Error::Extrapolation(_))));
}

#[test]
fn drift_step_reduces_to_a_shifted_source() {
    let sym = registry::symbol("ex2.5-sum-drift", 1).unwrap();
    let full = ProcessSpec::from_symbol(&sym).unwrap();
    let principal = full.principal_only();
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let t = 1.0;
    let f = SpaceTimeField::from_fn(grid, t, 40, |s, x| (1.0 + s) * (-(x[0] * x[0])).exp()).unwrap();
    // D(t) = ∫₀ᵗ b with b = 1 on [0, ½), -½ afterwards
    let d = |s: f64| if s < 0.5 { s } else { 0.5 - 0.5 * (s - 0.5) };
    let g = shift_field(&f, |s| vec![-(d(t) - d(s))]).unwrap();
    let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![-1.5 + 0.6 * i as f64]).collect();
    let a = mc_solution(&full, &f, t, &pts, 20_000, 10).unwrap();
    let b = mc_solution(&principal, &g, t, &pts, 20_000, 11).unwrap();
    for p in 0..pts.len() {
        let se = (a.standard_errors[p].powi(2) + b.standard_errors[p].powi(2)).sqrt();
        assert!((a.values[p] - b.values[p]).abs() <= 3.0 * se + 1e-3, "{p}: {} {}", a.values[p], b.values[p]);
    }
}

#[test]
fn increments_are_independent() {
    let spec = ProcessSpec::from_symbol(&registry::symbol("ex2.3-sbm-alpha05-sigma12", 1).unwrap()).unwrap();
    let n = 50_000;
    let (xi, eta) = (0.8, 1.3);
    let mut prod = Vec::with_capacity(n);
    let (mut ea, mut eb) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let p = sample_path(&spec, &[0.0, 0.7, 1.6], 12, i as u64).unwrap();
        let a = Complex64::new(0.0, xi * p.increment(1, 2)[0]).exp();
        let b = Complex64::new(0.0, eta * p.increment(0, 1)[0]).exp();
        prod.push(a * b);
        ea.push(a);
        eb.push(b);
    }
    let mean = |v: &[Complex64]| v.iter().sum::<Complex64>() / v.len() as f64;
    let m = mean(&prod);
    let var = prod.iter().map(|v| (v - m).norm_sqr()).sum::<f64>() / (n as f64 - 1.0);
    let diff = (m - mean(&ea) * mean(&eb)).norm();
    assert!(diff <= 3.0 * (var / n as f64).sqrt() * 2f64.sqrt(), "{diff}");
}

#[test]
fn paths_are_reproducible() {
    let spec = ProcessSpec::from_symbol(&registry::symbol("ex2.5-sum-poisson", 2).unwrap()).unwrap();
    let times = [0.0, 0.3, 1.0];
    let a = sample_path(&spec, &times, 99, 17).unwrap();
    let b = sample_path(&spec, &times, 99, 17).unwrap();
    assert_eq!(a, b);
    assert!(sample_path(&spec, &[0.1, 0.3], 99, 0).is_err());
}

#[cfg(feature = "parallel")]
#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = ProcessSpec::from_symbol(&registry::symbol("ex2.5-sum-poisson", 1).unwrap()).unwrap();
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    let f = SpaceTimeField::from_fn(grid, 1.0, 8, |_, x| (-x[0] * x[0]).exp()).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| mc_solution(&spec, &f, 1.0, &[vec![0.0], vec![0.5]], 2000, 5).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn process_validation() {
    assert!(ProcessSpec::new(1, PrincipalProcess::SbmModulated { alpha: 1.2, sigma: PiecewiseConstant::constant(1.0) }, None).is_err());
    let bad_drift = SecondPart::Drift { direction: vec![1.0, 0.0], speed: PiecewiseConstant::constant(1.0) };
    assert!(ProcessSpec::new(1, PrincipalProcess::SbmModulated { alpha: 0.5, sigma: PiecewiseConstant::constant(1.0) }, Some(bad_drift))
        .is_err());
    assert!(ProcessSpec::from_symbol(&registry::symbol("remark-anisotropic", 2).unwrap()).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rng2 = ChaCha8Rng::seed_from_u64(1);
    let spec = sbm(0.5, PiecewiseConstant::constant(1.0), None);
    assert!(matches!(sample_increment(&spec, 1.0, 0.5, &mut rng, &mut rng2), Err(Error::Ordering { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cf_modulus_is_bounded(seed in 0u64..10_000, xi in -10.0f64..10.0, k in 0usize..3) {
        let id = ["ex2.3-sbm-alpha05-sigma12", "ex2.4-clock-alpha075", "ex2.5-sum-poisson"][k];
        let spec = ProcessSpec::from_symbol(&registry::symbol(id, 1).unwrap()).unwrap();
        let n = 10_000;
        let samples = increments(&spec, 0.2, 1.3, n, seed);
        let (m, _) = empirical_cf(&samples, &[xi]).unwrap();
        prop_assert!(m.norm() <= 1.0 + 1.0 / (n as f64).sqrt());
    }
}
