use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jumpheat::maximal::{cube_ladder, maximal_function, CellField, Domain};
use jumpheat::registry;
use jumpheat::solver::{solve, SpaceTimeField};
use jumpheat::spectral::GridSpec;
use jumpheat::stochastic::mc_solution;

/// Runs `f` on a pool of the given size; sequential builds ignore the size.
#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn modes() -> Vec<(&'static str, usize)> {
    let mut out = vec![("sequential", 1)];
    if cfg!(feature = "parallel") {
        let n = std::thread::available_parallelism().map_or(1, |n| n.get());
        out.push(("parallel", n.max(2)));
    }
    out
}

fn bench_solver(c: &mut Criterion) {
    let sym = registry::symbol("ex2.3-sbm-alpha05-sigma12", 2).unwrap();
    let grid = GridSpec::new(2, 8.0, 128).unwrap();
    let f = SpaceTimeField::from_fn(grid, 1.0, 32, |t, x| (1.0 + t) * (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
    let mut g = c.benchmark_group("solve_2d_128");
    for (name, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| with_threads(threads, || solve(&sym, black_box(&f)).unwrap())));
    }
    g.finish();
}

fn bench_mc(c: &mut Criterion) {
    let spec = registry::process("ex2.4-clock", 1).unwrap();
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let f = SpaceTimeField::from_fn(grid, 1.0, 32, |_, x| (-(x[0] * x[0])).exp()).unwrap();
    let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![-1.0 + 0.25 * i as f64]).collect();
    let mut g = c.benchmark_group("mc_solution_10k");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || mc_solution(&spec, black_box(&f), 1.0, &pts, 10_000, 3).unwrap()))
        });
    }
    g.finish();
}

fn bench_maximal(c: &mut Criterion) {
    let phi = registry::phi("r^1.5").unwrap();
    let f = CellField::from_fn(0.0, 1.0 / 32.0, 32, vec![-1.0, -1.0], 1.0 / 16.0, 32, |t, x| (5.0 * t).sin() * (3.0 * x[0] - x[1]).cos())
        .unwrap();
    let ladder = cube_ladder(f.h, 2.0);
    let mut g = c.benchmark_group("maximal_2d_32");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || maximal_function(black_box(&f), &phi, &ladder, Domain::Full).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_solver, bench_mc, bench_maximal);
criterion_main!(benches);
