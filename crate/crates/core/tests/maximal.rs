use approx::assert_relative_eq;
use proptest::prelude::*;

use jumpheat::maximal::{
    build_filtration, check_phi_assumptions, cube_ladder, maximal_function, sharp_function, sharp_levels, verify_fs_hl,
    CellField, CellIndex, Domain, FsHlConfig, ParabolicCube,
};
use jumpheat::registry;
use jumpheat::symbols::BernsteinSpec;
use jumpheat::Error;

fn unit_grid(f: impl Fn(f64, &[f64]) -> f64) -> CellField {
    CellField::from_fn(0.0, 1.0 / 64.0, 64, vec![0.0], 1.0 / 64.0, 64, f).unwrap()
}

fn linear_filtration() -> jumpheat::maximal::PartitionFiltration {
    build_filtration(&BernsteinSpec::linear(), 1, -2, 6, Domain::Full).unwrap()
}

#[test]
fn phi_assumptions() {
    let lin = check_phi_assumptions(&BernsteinSpec::linear());
    assert!(lin.pass);
    assert_relative_eq!(lin.c_tilde, 2.0, max_relative = 1e-12);
    assert_eq!(lin.lambda0, Some(2.0));

    let half = check_phi_assumptions(&registry::phi("r^0.5").unwrap());
    assert!(half.pass);
    assert_relative_eq!(half.c_tilde, 2f64.sqrt(), max_relative = 1e-12);
    assert_eq!(half.lambda0, Some(4.0));

    let bounded = check_phi_assumptions(&registry::phi("bounded").unwrap());
    assert!(!bounded.pass);
    assert_eq!(bounded.lambda0, None);
}

#[test]
fn level_scales() {
    let sq = build_filtration(&registry::phi("r^2").unwrap(), 2, -3, 5, Domain::Full).unwrap();
    assert!(sq.levels.iter().all(|l| l.sigma == 1.0));
    assert!(sq.levels.iter().skip(1).all(|l| l.ell == 2));

    let f = build_filtration(&registry::phi("r^1.5").unwrap(), 1, -4, 8, Domain::Full).unwrap();
    for n in -3..=8 {
        let (c, p) = (f.level(n).unwrap(), f.level(n - 1).unwrap());
        let r = p.time_length / c.time_length;
        assert!(r == 2.0 || r == 4.0, "level {n}: {r}");
        assert!((1.0..2.0).contains(&c.sigma));
    }
    assert_eq!(f.check_nesting(8, 4), 0);
    assert_eq!(f.n0, 8.0);
    assert!(f.n0 <= f.n0_bound);
}

#[test]
fn level_zero_cells() {
    let phi = registry::phi("r^0.5").unwrap();
    let f = build_filtration(&phi, 2, -2, 4, Domain::Full).unwrap();
    let phi1 = phi.value(1.0).unwrap();
    let cell = CellIndex { n: 0, time: 3, space: vec![-1, 2] };
    let (t, x) = f.bounds(&cell).unwrap();
    assert_eq!(t, (3.0 * phi1, 4.0 * phi1));
    assert_eq!(x, vec![(-1.0, 0.0), (2.0, 3.0)]);
    assert_eq!(f.locate(0, 3.5 * phi1, &[-0.5, 2.5]), Some(cell.clone()));
    // left-open cells
    assert_eq!(f.locate(0, 4.0 * phi1, &[0.0, 3.0]), Some(cell));
    assert_eq!(f.locate(0, 0.0, &[0.5, 0.5]), None);
}

#[test]
fn half_space_partition() {
    let f = build_filtration(&BernsteinSpec::linear(), 1, -2, 4, Domain::Half).unwrap();
    assert!(f.locate(2, 0.3, &[-0.1]).is_none());
    assert!(f.locate(2, 0.3, &[0.1]).is_some());
    assert_eq!(f.check_nesting(6, 6), 0);
    let field = CellField::zeros(0.0, 0.25, 4, vec![-1.0], 0.25, 8).unwrap();
    assert!(matches!(sharp_function(&field, &f), Err(Error::Coverage(_))));
    assert!(matches!(maximal_function(&field, f.phi(), &[0.5], Domain::Half), Err(Error::Coverage(_))));
}

#[test]
fn filtration_preconditions() {
    assert!(build_filtration(&BernsteinSpec::linear(), 1, 1, 4, Domain::Full).is_err());
    assert!(build_filtration(&BernsteinSpec::linear(), 4, -1, 4, Domain::Full).is_err());
    // only doubling is needed to build levels; the growth condition fails separately
    assert!(build_filtration(&registry::phi("bounded").unwrap(), 1, -1, 1, Domain::Full).is_ok());
}

#[test]
fn parabolic_cube() {
    let c = ParabolicCube::new(&BernsteinSpec::linear(), 1.0, vec![0.0, 0.0], 2.0, Domain::Full).unwrap();
    assert!(c.contains(2.5, &[1.0, 1.0]));
    assert!(!c.contains(1.0, &[0.0, 0.0]));
    assert!(!c.contains(3.5, &[0.0, 0.0]));
    assert_relative_eq!(c.volume(), 2.0 * std::f64::consts::PI * 4.0, max_relative = 1e-14);
    assert!(ParabolicCube::new(&BernsteinSpec::linear(), 0.0, vec![-1.0], 1.0, Domain::Half).is_err());
}

#[test]
fn sharp_of_constant_vanishes() {
    let filt = linear_filtration();
    assert_eq!(sharp_levels(&unit_grid(|_, _| 0.0), &filt).unwrap(), vec![0, 1, 2, 3, 4, 5, 6]);
    let s = sharp_function(&unit_grid(|_, _| 3.7), &filt).unwrap();
    assert!(s.values().iter().all(|v| v.abs() < 1e-12));
    let s = sharp_function(&unit_grid(|_, _| 0.0), &filt).unwrap();
    assert_eq!(s.lp_norm(2.0), 0.0);
}

#[test]
fn sharp_of_cell_indicator() {
    // indicator of a level-1 cell: mean v = 1/4 over the level-0 cell,
    // mean oscillation 2v(1 - v); constant on every finer cell
    let f = unit_grid(|t, x| if t < 0.5 && x[0] < 0.5 { 1.0 } else { 0.0 });
    let s = sharp_function(&f, &linear_filtration()).unwrap();
    for v in s.values() {
        assert_relative_eq!(*v, 0.375, max_relative = 1e-14);
    }
}

#[test]
fn fefferman_stein_constants() {
    let filt = build_filtration(&BernsteinSpec::linear(), 1, -4, 8, Domain::Full).unwrap();
    assert_eq!(filt.n0, 4.0);
    let mut cfg = FsHlConfig::new(12, 1, vec![2.0]);
    cfg.hl_points = 32;
    let rep = verify_fs_hl(&filt, &cfg).unwrap();
    assert_eq!(rep.n0, 4.0);
    // (2q)^p N0^{p-1} with q = 2
    assert_eq!(rep.constants, vec![(2.0, 64.0)]);
    assert_eq!(rep.fs_violations, 0);
    assert!(rep.fs_rows.iter().all(|r| r.norm > 0.0 && r.sharp_norm > 0.0));
    assert!(verify_fs_hl(&filt, &FsHlConfig::new(1, 1, vec![1.0])).is_err());
}

/// Direct maximum over every grid-anchored cube, with the same ball and
/// time-length rounding as the operator.
fn brute_maximal(f: &CellField, phi: &BernsteinSpec, ladder: &[f64]) -> Vec<f64> {
    let (nt, ns) = (f.nt as i64, f.ns as i64);
    let v = f.values();
    let mut out = vec![0.0f64; v.len()];
    for &c in ladder {
        let w = ((phi.value(c).unwrap() / f.dt).round() as i64).max(1);
        let r = c / f.h;
        let mut k = 0i64;
        while (((k + 1) * (k + 1)) as f64) < r * r {
            k += 1;
        }
        for j0 in 0..nt {
            for i0 in 0..ns {
                let mut sum = 0.0;
                for j in j0..(j0 + w).min(nt) {
                    for i in (i0 - k).max(0)..=(i0 + k).min(ns - 1) {
                        sum += v[(j * ns + i) as usize].abs();
                    }
                }
                let mean = sum / (w * (2 * k + 1)) as f64;
                for j in j0..(j0 + w).min(nt) {
                    for i in (i0 - k).max(0)..=(i0 + k).min(ns - 1) {
                        let o = &mut out[(j * ns + i) as usize];
                        *o = o.max(mean);
                    }
                }
            }
        }
    }
    out
}

fn small_field(seed: u64) -> CellField {
    let mut state = seed;
    let vals: Vec<f64> = (0..256)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        })
        .collect();
    CellField::new(0.0, 1.0 / 16.0, 16, vec![-0.5], 1.0 / 16.0, 16, vals).unwrap()
}

#[test]
fn maximal_matches_brute_force() {
    for (seed, id) in [(1, "r"), (2, "r^0.5"), (3, "r^2")] {
        let phi = registry::phi(id).unwrap();
        let f = small_field(seed);
        let ladder = cube_ladder(f.h, 1.0);
        let m = maximal_function(&f, &phi, &ladder, Domain::Full).unwrap();
        let b = brute_maximal(&f, &phi, &ladder);
        for (x, y) in m.values().iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{id}: {x} vs {y}");
        }
    }
}

#[test]
fn maximal_of_constant_and_pointwise_bound() {
    let phi = BernsteinSpec::linear();
    let ladder = cube_ladder(1.0 / 64.0, 1.0);
    let m = maximal_function(&unit_grid(|_, _| -2.5), &phi, &ladder, Domain::Full).unwrap();
    assert!(m.values().iter().all(|v| (v - 2.5).abs() < 1e-12));

    let f = unit_grid(|t, x| (7.0 * t).sin() * (3.0 * x[0]).cos());
    let m = maximal_function(&f, &phi, &ladder, Domain::Full).unwrap();
    assert!(m.values().iter().zip(f.values()).all(|(a, b)| *a >= b.abs() - 1e-12));
    // the smallest cube is a single cell
    let m = maximal_function(&f, &phi, &[1.0 / 64.0], Domain::Full).unwrap();
    assert!(m.values().iter().zip(f.values()).all(|(a, b)| (a - b.abs()).abs() <= 1e-12));
    assert!(maximal_function(&f, &phi, &[], Domain::Full).is_err());
}

#[test]
fn averages_recover_smooth_fields() {
    // cell means converge to the point value as the level refines
    let g = |t: f64, x: f64| (2.0 * t).exp() * x.cos();
    let filt = build_filtration(&registry::phi("r^1.5").unwrap(), 1, -1, 9, Domain::Full).unwrap();
    let (t, x) = (0.4, 0.3);
    let mut errs = Vec::new();
    for n in [3, 5, 7, 9] {
        let cell = filt.locate(n, t, &[x]).unwrap();
        let ((t0, t1), xs) = filt.bounds(&cell).unwrap();
        let (x0, x1) = xs[0];
        let k = 64;
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                s += g(t0 + (a as f64 + 0.5) / k as f64 * (t1 - t0), x0 + (b as f64 + 0.5) / k as f64 * (x1 - x0));
            }
        }
        errs.push((s / (k * k) as f64 - g(t, x)).abs());
    }
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[3] < 1e-2);
}

fn field_from(vals: &[f64]) -> CellField {
    CellField::new(0.0, 1.0 / 16.0, 16, vec![0.0], 1.0 / 16.0, 16, vals.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cells_nest(n in 1i32..=6, t in 1e-3f64..20.0, x in -8.0f64..8.0) {
        let f = build_filtration(&registry::phi("r^1.5").unwrap(), 1, -2, 6, Domain::Full).unwrap();
        let child = f.locate(n, t, &[x]).unwrap();
        prop_assert_eq!(f.parent(&child), f.locate(n - 1, t, &[x]));
        let ((t0, t1), xs) = f.bounds(&child).unwrap();
        prop_assert!(t > t0 && t <= t1 && x > xs[0].0 && x <= xs[0].1);
    }

    #[test]
    fn sharp_is_homogeneous_and_sublinear(
        a in proptest::collection::vec(-3.0f64..3.0, 256),
        b in proptest::collection::vec(-3.0f64..3.0, 256),
        c in -4.0f64..4.0,
    ) {
        let filt = build_filtration(&BernsteinSpec::linear(), 1, -1, 4, Domain::Full).unwrap();
        let (fa, fb) = (field_from(&a), field_from(&b));
        let sa = sharp_function(&fa, &filt).unwrap();
        let sb = sharp_function(&fb, &filt).unwrap();
        let sc = sharp_function(&fa.map(|v| c * v), &filt).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ss = sharp_function(&field_from(&sum), &filt).unwrap();
        for k in 0..256 {
            prop_assert!((sc.values()[k] - c.abs() * sa.values()[k]).abs() <= 1e-12 * (1.0 + sa.values()[k]));
            prop_assert!(ss.values()[k] <= sa.values()[k] + sb.values()[k] + 1e-12);
        }
    }

    #[test]
    fn maximal_is_monotone_and_sublinear(
        a in proptest::collection::vec(-3.0f64..3.0, 256),
        b in proptest::collection::vec(0.0f64..1.0, 256),
    ) {
        let phi = BernsteinSpec::linear();
        let ladder = cube_ladder(1.0 / 16.0, 1.0);
        let fa = field_from(&a);
        let bigger: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.abs() + y).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ma = maximal_function(&fa, &phi, &ladder, Domain::Full).unwrap();
        let mb = maximal_function(&field_from(&b), &phi, &ladder, Domain::Full).unwrap();
        let mg = maximal_function(&field_from(&bigger), &phi, &ladder, Domain::Full).unwrap();
        let ms = maximal_function(&field_from(&sum), &phi, &ladder, Domain::Full).unwrap();
        for k in 0..256 {
            prop_assert!(mg.values()[k] >= ma.values()[k] - 1e-12);
            prop_assert!(ms.values()[k] <= ma.values()[k] + mb.values()[k] + 1e-12);
        }
    }
}
