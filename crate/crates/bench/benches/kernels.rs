use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use std::hint::black_box;
use tuckermesh::metrics::hausdorff;
use tuckermesh::{enumerate_candidates, hosvd_economy, Mode, MsdmContext, PreparedAnimation};
use tuckermesh_bench::{frame_points, mixed_asset};

fn mode_multiply(c: &mut Criterion) {
    let anim = mixed_asset(2500, 60);
    let x = anim.vertices();
    let u1 = DMatrix::from_fn(20, 2500, |i, j| ((i * 31 + j * 7) % 13) as f64 / 13.0);
    let u3 = DMatrix::from_fn(10, 60, |i, j| ((i * 5 + j * 3) % 11) as f64 / 11.0);
    c.bench_function("mode_multiply/mode1_2500x3x60", |b| {
        b.iter(|| black_box(x.mode_multiply(&u1, Mode::One).unwrap()))
    });
    c.bench_function("mode_multiply/mode3_2500x3x60", |b| {
        b.iter(|| black_box(x.mode_multiply(&u3, Mode::Three).unwrap()))
    });
}

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("hosvd_economy");
    group.sample_size(10);
    for k in [400, 1600] {
        let anim = mixed_asset(k, 50);
        group.bench_with_input(BenchmarkId::from_parameter(k), &anim, |b, a| {
            b.iter(|| black_box(hosvd_economy(a.vertices()).unwrap()))
        });
    }
    group.finish();

    let anim = mixed_asset(1600, 50);
    let prepared = PreparedAnimation::new(&anim).unwrap();
    c.bench_function("truncate_reconstruct/1600x50_v40_f10", |b| {
        b.iter(|| black_box(prepared.reconstruct(40, 10).unwrap()))
    });
}

fn candidates(c: &mut Criterion) {
    c.bench_function("enumerate_candidates/k10000_f500", |b| {
        b.iter(|| black_box(enumerate_candidates(10_000, 500, 0.05, 0.002).unwrap()))
    });
}

fn metrics(c: &mut Criterion) {
    let anim = mixed_asset(2500, 4);
    let (a, b) = (frame_points(&anim, 0), frame_points(&anim, 1));
    c.bench_function("hausdorff/2500", |bench| {
        bench.iter(|| black_box(hausdorff(&a, &b).unwrap()))
    });
    let ctx = MsdmContext::with_defaults(anim.topology().clone());
    c.bench_function("msdm/2500", |bench| {
        bench.iter(|| black_box(ctx.frame(&a, &b).unwrap()))
    });
}

criterion_group!(benches, mode_multiply, decomposition, candidates, metrics);
criterion_main!(benches);
