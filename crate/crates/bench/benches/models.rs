use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use monopo_bench::{frequency_grid, sweep_observations};
use monopo_core::analysis::{fit_model, fit_theta, FreeParam, ResidualMode};
use monopo_core::locksim::{default_plant, simulate_lock, LockConfig};
use monopo_core::{coresonance, squeezing, CavitySpec, CrystalSpec, SqueezingParams};

fn bench_spectrum(c: &mut Criterion) {
    let params = SqueezingParams::opo1();
    let freqs = frequency_grid(1001);
    let x = squeezing::pump_to_x(0.130, params.p_threshold_w).unwrap();
    c.bench_function("spectrum_1001", |b| {
        b.iter(|| squeezing::spectrum(black_box(&params), black_box(x), &freqs).unwrap())
    });
}

fn bench_scan(c: &mut Criterion) {
    let crystal = CrystalSpec::ppktp_860nm();
    let cavity = CavitySpec::new(0.118, 0.008);
    c.bench_function("scan_6k_points", |b| {
        b.iter(|| coresonance::scan_table(&crystal, &cavity, 37.0, 43.0, 0.001).unwrap())
    });
    c.bench_function("worst_case_best_eta", |b| {
        b.iter(|| coresonance::worst_case_best_eta(black_box(&crystal)).unwrap())
    });
}

fn bench_fit(c: &mut Criterion) {
    let data = sweep_observations(10);
    let fixed = SqueezingParams::opo1();
    c.bench_function("fit_theta", |b| {
        b.iter(|| fit_theta(black_box(&data), &fixed).unwrap())
    });
    let mut group = c.benchmark_group("fit_joint");
    group.sample_size(10);
    group.bench_function("theta_p_th", |b| {
        b.iter(|| {
            fit_model(
                black_box(&data),
                &fixed,
                &[FreeParam::ThetaTilde, FreeParam::PThreshold],
                ResidualMode::Db,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_locksim(c: &mut Criterion) {
    let plant = default_plant();
    let config = LockConfig::default();
    let mut group = c.benchmark_group("locksim");
    group.sample_size(10);
    group.bench_function("simulate_10s", |b| {
        b.iter(|| simulate_lock(&plant, &config, 10.0, black_box(1)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_spectrum,
    bench_scan,
    bench_fit,
    bench_locksim
);
criterion_main!(benches);
