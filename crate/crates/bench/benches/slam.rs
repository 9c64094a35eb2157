use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rigidkit::graphslam::{
    build_normal_equations, optimize, synth_circle2d, synth_grid2d, synth_sphere3d, LinearSolver, Noise, SolverConfig,
};
use std::hint::black_box;

fn slam(c: &mut Criterion) {
    let noise = Noise::new(0.05, 0.02);

    let mut g = c.benchmark_group("normal_equations");
    for n in [100, 1000] {
        let (_, circle) = synth_circle2d(n, noise, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("circle2d", n), &circle, |b, graph| {
            b.iter(|| build_normal_equations(black_box(graph)).unwrap())
        });
    }
    let (_, sphere) = synth_sphere3d(200, noise, 1).unwrap();
    g.bench_function("sphere3d/200", |b| b.iter(|| build_normal_equations(black_box(&sphere)).unwrap()));
    g.finish();

    let mut g = c.benchmark_group("optimize");
    g.sample_size(10);
    let (_, grid) = synth_grid2d(400, noise, 1).unwrap();
    for (name, solver) in [("dense", LinearSolver::Dense), ("sparse", LinearSolver::Sparse)] {
        let cfg = SolverConfig { linear_solver: solver, ..SolverConfig::default() };
        g.bench_function(BenchmarkId::new("grid2d_400", name), |b| b.iter(|| optimize(black_box(&grid), &cfg).unwrap()));
    }
    let cfg = SolverConfig::default();
    g.bench_function("sphere3d_200", |b| b.iter(|| optimize(black_box(&sphere), &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, slam);
criterion_main!(benches);
