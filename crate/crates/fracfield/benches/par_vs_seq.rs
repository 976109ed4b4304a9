//! Parallel vs sequential throughput of the two data-parallel kernels:
//! the sinc-quadrature resolvent sweep and the overkill contraction.
//! Run with `cargo bench -p fracfield`; the parallel entries require the
//! default `parallel` feature.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fracfield::fractional::{apply_quadrature, apply_quadrature_seq, build_grid, calibrate_k, CalibrationMode};
use fracfield::mesh::{assemble, build_mesh};
use fracfield::rng::{NormalStream, StreamTag};
use fracfield::spectral::{sample_overkill, OverkillProjector};

fn bench_quadrature(c: &mut Criterion) {
    let mesh = build_mesh(2, 32).unwrap();
    let fem = assemble(&mesh, 0.5).unwrap();
    let k = calibrate_k(mesh.diameter(), 0.75, 2, CalibrationMode::Experiment).unwrap();
    let grid = build_grid(0.75, k).unwrap();
    let mut b = vec![0.0; mesh.interior_nodes()];
    NormalStream::new(1, StreamTag::Test, 0).fill_normals(&mut b);

    let mut group = c.benchmark_group("apply_quadrature_d2_n32");
    group.sample_size(10);
    group.bench_function("parallel", |bench| {
        bench.iter(|| apply_quadrature(black_box(&grid), &fem, &b).unwrap())
    });
    group.bench_function("sequential", |bench| {
        bench.iter(|| apply_quadrature_seq(black_box(&grid), &fem, &b).unwrap())
    });
    group.finish();
}

fn bench_overkill(c: &mut Criterion) {
    let mesh = build_mesh(2, 32).unwrap();
    let n_ok = 513;
    let projector = OverkillProjector::new(&mesh, n_ok);
    let noise = sample_overkill(2, n_ok, 0.5, 3, 0).unwrap();

    let mut group = c.benchmark_group("overkill_eval_d2");
    group.bench_function("parallel", |bench| {
        bench.iter(|| projector.eval_solution(black_box(&noise), 0.75).unwrap())
    });
    group.bench_function("sequential", |bench| {
        bench.iter(|| projector.eval_solution_seq(black_box(&noise), 0.75).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_quadrature, bench_overkill);
criterion_main!(benches);
