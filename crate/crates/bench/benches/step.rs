use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use epdiff_bench::{gaussian_state, grid};
use epdiff_core::{integrator, SchemeKind, SolverOptions};

fn newton_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_step");
    group.sample_size(10);
    let opts = SolverOptions::default();
    for n in [64usize, 256] {
        let g = grid(n);
        let x = gaussian_state(&g);
        for scheme in SchemeKind::ALL {
            group.bench_with_input(BenchmarkId::new(scheme.name(), 2 * n + 1), &x, |b, x| {
                b.iter(|| integrator::step(&g, scheme, x, 0.01, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn jacobian(c: &mut Criterion) {
    let g = grid(256);
    let x = gaussian_state(&g);
    c.bench_function("jacobian_assembly_513", |b| {
        b.iter(|| integrator::jacobian(&g, SchemeKind::Average, &x, 0.01).unwrap())
    });
}

criterion_group!(benches, newton_step, jacobian);
criterion_main!(benches);
