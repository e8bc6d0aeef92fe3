use criterion::{criterion_group, criterion_main, Criterion};
use fpcam_bench::{blurred, chart_system};
use fpcam_core::recon::{tv_prox, TvKind};
use fpcam_core::{OpticsConfig, Volume, VolumeShape};
use std::hint::black_box;

fn stacked_operator(c: &mut Criterion) {
    for (name, optics) in [("ideal", OpticsConfig::ideal()), ("blurred", blurred())] {
        let s = chart_system(8, 8, 32, optics);
        let x = vec![0.5; s.n_unknowns()];
        let mut y = vec![0.0; s.n_rows()];
        c.bench_function(&format!("forward 64x64 T=32 {name}"), |b| {
            b.iter(|| s.apply(black_box(&x), &mut y))
        });
        let yv = s.measurement_vector();
        let mut xa = vec![0.0; s.n_unknowns()];
        c.bench_function(&format!("adjoint 64x64 T=32 {name}"), |b| {
            b.iter(|| s.apply_adjoint(black_box(&yv), &mut xa))
        });
    }
}

fn prox(c: &mut Criterion) {
    let shape = VolumeShape::new(1, 64, 64);
    let v = Volume::new(shape, (0..shape.len()).map(|i| ((i * 37) % 101) as f64 / 100.0).collect()).unwrap();
    c.bench_function("tv_prox 2d 64x64 15 iters", |b| {
        b.iter(|| tv_prox(black_box(&v), 0.05, TvKind::Tv2d, 15).unwrap())
    });
    let shape = VolumeShape::new(8, 32, 32);
    let v = Volume::new(shape, (0..shape.len()).map(|i| ((i * 37) % 101) as f64 / 100.0).collect()).unwrap();
    c.bench_function("tv_prox 3d 8x32x32 15 iters", |b| {
        b.iter(|| tv_prox(black_box(&v), 0.05, TvKind::Tv3d, 15).unwrap())
    });
}

criterion_group!(benches, stacked_operator, prox);
criterion_main!(benches);
