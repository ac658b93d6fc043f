use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mflq::examples::example_5_2;
use mflq::operators::build_section;
use mflq::perturbation::{classify_family, EpsSchedule};
use mflq::riccati::{solve_game_riccati, RiccatiOptions};
use mflq::synthesis::{evaluate_functional, evaluate_functional_mc, synthesize, ControlLaw, NoiseBundle};
use mflq::Vector;
use mflq_bench::{coupled_game, regularized_example, unit_grid};

fn riccati(c: &mut Criterion) {
    let opts = RiccatiOptions::default();
    let grid = unit_grid(2000);
    let scalar = regularized_example(0.1);
    let coupled = coupled_game();
    c.bench_function("game riccati, scalar, N=2000", |b| b.iter(|| solve_game_riccati(&scalar, &grid, &opts).unwrap()));
    c.bench_function("game riccati, n=3, N=2000", |b| b.iter(|| solve_game_riccati(&coupled, &grid, &opts).unwrap()));
}

fn evaluation(c: &mut Criterion) {
    let opts = RiccatiOptions::default();
    let grid = unit_grid(1000);
    let spec = coupled_game();
    let law = ControlLaw::feedback(synthesize(&spec, &grid, &opts).unwrap());
    let x = Vector::from_element(spec.n, 1.0);
    c.bench_function("synthesize, n=3, N=1000", |b| b.iter(|| synthesize(&spec, &grid, &opts).unwrap()));
    c.bench_function("moment value, n=3, N=1000", |b| b.iter(|| evaluate_functional(&spec, &law, &x, &grid).unwrap()));
    let mut group = c.benchmark_group("monte carlo");
    group.sample_size(10);
    group.bench_function("1000 paths, n=3, N=1000", |b| {
        b.iter_batched(
            || NoiseBundle::new(3, 1000),
            |noise| evaluate_functional_mc(&spec, &law, &x, &grid, &noise).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn sections_and_families(c: &mut Criterion) {
    let mut group = c.benchmark_group("analysis");
    group.sample_size(10);
    let spec = example_5_2();
    group.bench_function("section, 32 blocks, N=512", |b| b.iter(|| build_section(&spec, &unit_grid(512), 32).unwrap()));
    let schedule = EpsSchedule::new(0.5, 0.5, 8).unwrap();
    let x = Vector::from_element(1, 1.0);
    group.bench_function("eps family, 8 points, N=500", |b| {
        b.iter(|| classify_family(&spec, &schedule, &x, &unit_grid(500), 1e-2).unwrap())
    });
    group.finish();
}

criterion_group!(benches, riccati, evaluation, sections_and_families);
criterion_main!(benches);
