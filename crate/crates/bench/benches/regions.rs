use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use simplexconf::conformal::qr_region_at;
use simplexconf::hdr::{floor_polytope, grid_region, simplex_grid_region};
use simplexconf::simulation::{generate_scenario, ScenarioSpec};
use simplexconf::{fit_mle, FitConfig, MeanPrecision};

// A typical calibrated threshold for phi near 20.
const Q_HDR: f64 = -1.9;
const Q_QR: f64 = 1.9;

fn params(parts: usize) -> MeanPrecision {
    let mu = match parts {
        3 => vec![0.34, 0.33, 0.33],
        _ => vec![0.25, 0.26, 0.24, 0.25],
    };
    MeanPrecision::new(mu, 20.09).unwrap()
}

fn regions(c: &mut Criterion) {
    let mp3 = params(3);
    let mp4 = params(4);
    c.bench_function("qr_region d3", |b| b.iter(|| qr_region_at(black_box(&mp3), Q_QR).unwrap()));
    c.bench_function("floor_polytope d3", |b| b.iter(|| floor_polytope(black_box(&mp3), Q_HDR)));
    c.bench_function("grid_region d3 m100", |b| b.iter(|| grid_region(black_box(&mp3), Q_HDR, 100)));
    c.bench_function("simplex_grid_region d3 m200", |b| b.iter(|| simplex_grid_region(black_box(&mp3), Q_HDR, 200)));
    c.bench_function("grid_region d4 m20", |b| b.iter(|| grid_region(black_box(&mp4), Q_HDR, 20)));
    let mut slow = c.benchmark_group("full grid");
    slow.sample_size(10);
    slow.bench_function("simplex_grid_region d4 m100", |b| b.iter(|| simplex_grid_region(black_box(&mp4), Q_HDR, 100)));
    slow.finish();
}

fn fitting(c: &mut Criterion) {
    let data = generate_scenario(&ScenarioSpec::named("1a").unwrap().with_n(700)).unwrap();
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    group.bench_function("fit_mle scenario 1a n700", |b| b.iter(|| fit_mle(black_box(&data), &FitConfig::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, regions, fitting);
criterion_main!(benches);
