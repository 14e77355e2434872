use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qtwist_core::connection::QuatConnection;
use qtwist_core::ehrep::{certified_units, kernel_intersection_check, weight_operator};
use qtwist_core::flatmodel::build_flat_model;
use qtwist_core::sample;

fn weight(c: &mut Criterion) {
    let ctx = build_flat_model(2).unwrap();
    c.bench_function("weight_operator_spectrum_n2", |b| b.iter(|| weight_operator(black_box(&ctx)).spectrum()));
}

fn curvature(c: &mut Criterion) {
    let ctx = build_flat_model(2).unwrap().with_degree_bound(6);
    let mut rng = sample::stream(1, "bench");
    let conn = QuatConnection::new(&ctx, sample::self_dual_alpha(&mut rng, &ctx, 2).unwrap()).unwrap();
    let p = sample::rand_vec(&mut rng, ctx.dim());
    c.bench_function("curvature_at_point_n2", |b| b.iter(|| conn.curvature_at(black_box(&p))));
}

fn kernel(c: &mut Criterion) {
    let ctx = build_flat_model(2).unwrap();
    let units = certified_units();
    c.bench_function("t_kernel_intersection_n2", |b| b.iter(|| kernel_intersection_check(black_box(&ctx), &units).unwrap()));
}

criterion_group!(benches, weight, curvature, kernel);
criterion_main!(benches);
