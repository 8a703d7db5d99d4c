use std::hint::black_box;

use berryfw::diagonalizer::{analyze, energy_order2_canonical};
use berryfw::dynamics::{integrate, NeutrinoBand, Rk45Options};
use berryfw::verify::{bracket_check, default_potential};
use berryfw::{Method, ModelSpec, PhasePoint, ScalarField, Tolerances, TrajectoryState};
use criterion::{criterion_group, criterion_main, Criterion};

fn energy(c: &mut Criterion) {
    let model = ModelSpec::dirac(1.0, 1.0, default_potential());
    let x = PhasePoint::new([0.3, 0.2, -0.4], [0.5, -0.3, 0.8]);
    let tol = Tolerances::default();
    c.bench_function("dirac_analyze", |b| b.iter(|| analyze(black_box(&model), black_box(&x), &tol).unwrap()));
    let pd = analyze(&model, &x, &tol).unwrap();
    c.bench_function("dirac_energy_order2", |b| b.iter(|| energy_order2_canonical(black_box(&pd), 0.01)));
    let two = berryfw::verify::default_affine_two_level();
    c.bench_function("two_level_analyze", |b| b.iter(|| analyze(black_box(&two), black_box(&x), &tol).unwrap()));
}

fn brackets(c: &mut Criterion) {
    let mut g = c.benchmark_group("bracket");
    g.sample_size(10);
    g.bench_function("check_20_cases_degree_4", |b| b.iter(|| bracket_check(black_box(1), 20, 4).unwrap()));
    g.finish();
}

fn trajectory(c: &mut Criterion) {
    let model = ModelSpec::neutrino(ScalarField::Linear {
        value: 1.0,
        gradient: [0.05, 0.0, 0.0],
    });
    let band = NeutrinoBand::new(&model, 1e-2, 1.0, Tolerances::default()).unwrap();
    let st = TrajectoryState {
        t: 0.0,
        r: [0.0; 3],
        p: [0.0, 0.0, 1.0],
        lambda: 1.0,
    };
    let mut g = c.benchmark_group("trajectory");
    g.sample_size(10);
    g.bench_function("rk4_100_steps", |b| {
        b.iter(|| integrate(&band, black_box(&st), 1e-2, 100, Method::Rk4, Rk45Options::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, energy, brackets, trajectory);
criterion_main!(benches);
