//! Sequential against rayon execution for the data-parallel kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lrpath::convolution::basis_convolutions;
use lrpath::cross::{cross_approximate, CrossConfig, FnMatrix};
use lrpath::mesh::{QuadratureRule, TimeGrid};
use lrpath::monte_carlo::{mc_estimate, McConfig};
use lrpath::problems::ProblemSpec;
use lrpath::solver::{Discretization, SolverConfig};
use lrpath::Exec;
use nalgebra::DMatrix;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_cauchy");
    g.sample_size(10);
    let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
    let d = Discretization::new(p, 2.0, 1000, 64).unwrap();
    for (name, exec) in POLICIES {
        let cfg = SolverConfig {
            exec,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::new(name, "M=2000,n=64"), &cfg, |b, cfg| {
            b.iter(|| d.solve(cfg).unwrap())
        });
    }
    g.finish();
}

fn convolutions(c: &mut Criterion) {
    let mut g = c.benchmark_group("basis_convolutions");
    let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
    let d = Discretization::new(p, 2.0, 4000, 128).unwrap();
    let basis = DMatrix::from_fn(8000, 10, |i, j| ((i * (j + 1)) as f64 * 1e-3).sin());
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, "M=8000,r=10"), |b| {
            b.iter(|| basis_convolutions(&basis, &d.kernel, exec).unwrap())
        });
    }
    g.finish();
}

fn cross(c: &mut Criterion) {
    let mut g = c.benchmark_group("cross");
    let m = FnMatrix::new(8000, 200, |i, j| 1.0 / (1.0 + (i as f64 * 1e-3 - j as f64 * 1e-2).powi(2)));
    for (name, exec) in POLICIES {
        let cfg = CrossConfig {
            exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::new(name, "8000x200"), |b| {
            b.iter(|| cross_approximate(&m, &cfg).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
    let tg = TimeGrid::new(1.0, 32, QuadratureRule::Trapezoid).unwrap();
    for (name, exec) in POLICIES {
        let cfg = McConfig {
            samples: 100_000,
            exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::new(name, "K=1e5,n=32"), |b| {
            b.iter(|| mc_estimate(&p, &tg, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, solve, convolutions, cross, monte_carlo);
criterion_main!(benches);
