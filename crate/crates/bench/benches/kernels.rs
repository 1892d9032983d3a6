use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use svbound::oracle::seesaw_max;
use svbound::scan::FastEvaluator;
use svbound::tightness::check_tightness;
use svbound::{correlation_matrix, optimize_filter, svd_3x9, FilterParams, FilterSearch, OracleConfig, TightnessConfig};
use svbound_bench::fixtures;

fn correlation(c: &mut Criterion) {
    for (name, rho) in fixtures() {
        c.bench_function(&format!("correlation_matrix/{name}"), |b| b.iter(|| correlation_matrix(black_box(&rho))));
    }
}

fn svd(c: &mut Criterion) {
    let m = correlation_matrix(&fixtures()[0].1).unwrap().m;
    c.bench_function("svd_3x9", |b| b.iter(|| svd_3x9(black_box(&m))));
}

fn fast_eval(c: &mut Criterion) {
    let ev = FastEvaluator::new(&fixtures()[0].1).unwrap();
    let params = FilterParams::new(3.0, 0.2, 40.0).unwrap();
    c.bench_function("fast_filter_eval", |b| b.iter(|| ev.eval(black_box(params))));
}

fn tightness(c: &mut Criterion) {
    let corr = correlation_matrix(&fixtures()[1].1).unwrap();
    let cfg = TightnessConfig::default();
    c.bench_function("check_tightness/ghz_noise_0.5", |b| b.iter(|| check_tightness(black_box(&corr.svd), &cfg)));
}

fn seesaw(c: &mut Criterion) {
    let rho = &fixtures()[1].1;
    let cfg = OracleConfig { restarts: 20, ..Default::default() };
    let mut g = c.benchmark_group("seesaw");
    g.sample_size(10);
    g.bench_function("ghz_noise_0.5/20_restarts", |b| b.iter(|| seesaw_max(black_box(rho), &cfg)));
    g.finish();
}

fn filter_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimize_filter");
    g.sample_size(10);
    for (name, rho) in fixtures() {
        g.bench_function(name, |b| b.iter(|| optimize_filter(black_box(&rho), &FilterSearch::default())));
    }
    g.finish();
}

criterion_group!(benches, correlation, svd, fast_eval, tightness, seesaw, filter_search);
criterion_main!(benches);
