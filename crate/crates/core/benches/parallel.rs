//! Sequential versus rayon execution on the three heavy kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qrac::mub::galois_mubs;
use qrac::oiscan::{scan_with, DEFAULT_TOL};
use qrac::par::Execution;
use qrac::perturb::{sweep_with, SweepSpec, DEFAULT_MARGIN};
use qrac::success::{p_general_with, RequestWeights};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_p_general(c: &mut Criterion) {
    let set = galois_mubs(11).unwrap();
    let bases: Vec<_> = set.bases().iter().take(4).collect();
    let w = RequestWeights::uniform(4);
    let mut g = c.benchmark_group("p_general_d11_n4");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| p_general_with(black_box(&bases), &w, exec).unwrap().value)
        });
    }
    g.finish();
}

fn bench_scan(c: &mut Criterion) {
    let set = galois_mubs(9).unwrap();
    let mut g = c.benchmark_group("oi_scan_d9");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| scan_with(black_box(&set), DEFAULT_TOL, exec).unwrap().clusters.len())
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let set = galois_mubs(5).unwrap();
    let spec = SweepSpec::new(SweepSpec::grid(0.0, 0.2, 0.05).unwrap(), None, DEFAULT_MARGIN).unwrap();
    let mut g = c.benchmark_group("perturb_sweep_d5");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep_with(black_box(&spec), &set, exec).unwrap().best.p)
        });
    }
    g.finish();
}

criterion_group!(benches, bench_p_general, bench_scan, bench_sweep);
criterion_main!(benches);
