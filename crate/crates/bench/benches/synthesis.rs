use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use korgforge::ltl::negate_to_buchi;
use korgforge::synthesis::{solve_exists, solve_exists_recovery, SynthesisOptions};
use korgforge_bench::model;

fn opts(limit: usize) -> SynthesisOptions {
    SynthesisOptions { limit, ..Default::default() }
}

fn relay(c: &mut Criterion) {
    let tm = model("fig5.tm");
    c.bench_function("relay/exists", |b| b.iter(|| solve_exists(black_box(&tm), &opts(10)).unwrap()));
    c.bench_function("relay/recovery", |b| b.iter(|| solve_exists_recovery(black_box(&tm), &opts(10)).unwrap()));
}

fn tcp(c: &mut Criterion) {
    let mut g = c.benchmark_group("tcp");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    let phi1 = model("tcp_phi1.tm");
    g.bench_function("phi1/exists", |b| b.iter(|| solve_exists(black_box(&phi1), &opts(10)).unwrap()));
    g.bench_function("phi1/recovery", |b| b.iter(|| solve_exists_recovery(black_box(&phi1), &opts(10)).unwrap()));
    let phi2 = model("tcp_phi2.tm");
    g.bench_function("phi2/recovery", |b| b.iter(|| solve_exists_recovery(black_box(&phi2), &opts(10)).unwrap()));
    let phi3 = model("tcp_phi3.tm");
    g.bench_function("phi3/exists", |b| b.iter(|| solve_exists(black_box(&phi3), &opts(3)).unwrap()));
    g.finish();
}

fn ltl(c: &mut Criterion) {
    let phi2 = model("tcp_phi2.tm");
    c.bench_function("ltl/negate phi2", |b| b.iter(|| negate_to_buchi(black_box(phi2.property()))));
}

criterion_group!(benches, relay, tcp, ltl);
criterion_main!(benches);
