use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use varexp_core::energy::{expansion_lq, sup_over_ray, EnergyProblem};
use varexp_core::instanton::{moments_by_quadrature, moments_closed_form};
use varexp_core::modular::{luxemburg_norm, random_exponent_field, random_function, Measure, RadialGrid};
use varexp_core::quadrature::{integrate_halfline, integrate_radial, QuadSpec};
use varexp_core::special::DimParams;

fn quadrature(c: &mut Criterion) {
    let spec = QuadSpec::default();
    c.bench_function("halfline algebraic tail", |b| {
        b.iter(|| integrate_halfline(|t| black_box(t) * (1.0 + t * t).powi(-2), &spec).unwrap())
    });
    c.bench_function("radial gaussian n=5", |b| {
        b.iter(|| integrate_radial(black_box(5), |r| (-r * r).exp(), &spec).unwrap())
    });
}

fn moments(c: &mut Criterion) {
    let dims = DimParams::new(5, 2.0).unwrap();
    c.bench_function("moments closed form", |b| b.iter(|| moments_closed_form(black_box(&dims)).unwrap()));
    let spec = QuadSpec::default();
    c.bench_function("moments by quadrature", |b| {
        b.iter(|| moments_by_quadrature(black_box(&dims), &spec).unwrap())
    });
}

fn luxemburg(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = Arc::new(RadialGrid::uniform(Measure::Radial(3), 1.0, 6, 12).unwrap());
    let p = random_exponent_field(&grid, 1.1, 6.0, &mut rng).unwrap();
    let u = random_function(&grid, &mut rng).unwrap();
    c.bench_function("luxemburg norm", |b| b.iter(|| luxemburg_norm(black_box(&u), &p).unwrap()));
}

fn energy(c: &mut Criterion) {
    let prob = EnergyProblem::isotropic(5, 2.0, 0.0, -10.0, 0.0).unwrap();
    let mut group = c.benchmark_group("energy");
    group.sample_size(20);
    group.bench_function("lq bubble integral eps=2^-8", |b| {
        b.iter(|| expansion_lq(&prob, black_box(2f64.powi(-8))).unwrap())
    });
    group.bench_function("sup over ray eps=2^-8", |b| {
        b.iter(|| sup_over_ray(&prob, black_box(2f64.powi(-8))).unwrap())
    });
    group.finish();
}

criterion_group!(benches, quadrature, moments, luxemburg, energy);
criterion_main!(benches);
