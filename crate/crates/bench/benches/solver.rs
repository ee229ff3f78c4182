use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use retirement_bench::{baseline, solved, M0};
use retirement_core::boundary::DEFAULT_ROOT_TOL;
use retirement_core::{j_hat_on_path, lattice_solve, mc_evaluate, solve_boundary_with, LatticeSpec, McSettings, Scheme};

fn boundary(c: &mut Criterion) {
    let model = baseline();
    let mut group = c.benchmark_group("solve_boundary");
    group.sample_size(10);
    for scheme in [Scheme::PiecewiseLinear, Scheme::Trapezoid] {
        for n in [100, 200] {
            group.bench_with_input(BenchmarkId::new(scheme.as_str(), n), &n, |b, &n| {
                b.iter(|| solve_boundary_with(&model, M0, n, DEFAULT_ROOT_TOL, scheme).unwrap())
            });
        }
    }
    group.finish();
}

fn value(c: &mut Criterion) {
    let model = baseline();
    let sol = solved(&model, 200);
    let l = model.constants().l_terminal;
    c.bench_function("j_hat_on_path", |b| {
        b.iter(|| j_hat_on_path(&model, &sol, black_box(7.3), black_box(0.9 * l)).unwrap())
    });
}

fn oracles(c: &mut Criterion) {
    let model = baseline();
    let sol = solved(&model, 100);
    let l = model.constants().l_terminal;
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let spec = LatticeSpec::for_model(&model, M0, 200, 400);
    group.bench_function("lattice_200x400", |b| b.iter(|| lattice_solve(&model, &spec).unwrap()));
    let settings = McSettings::new(10_000, 7);
    group.bench_function("mc_10k", |b| {
        b.iter(|| mc_evaluate(&model, &sol, 10.0, 0.85 * l, &settings).unwrap())
    });
    group.finish();
}

criterion_group!(benches, boundary, value, oracles);
criterion_main!(benches);
