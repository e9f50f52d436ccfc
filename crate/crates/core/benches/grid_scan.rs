//! Sequential against data-parallel grid work: the residual scan and a full
//! Remez fit, on a cheap integrand and on the quadrature-backed Kurepa quotient.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ineqcert::exec::Exec;
use ineqcert::minimax::{infnorm_with, remez_minimax, RemezOptions};
use ineqcert::normalize::LimitStrategy;
use ineqcert::polycore::Polynomial;
use ineqcert::prover::{normalize_job, ProofJob};

fn strategies() -> Vec<(&'static str, Exec)> {
    #[allow(unused_mut)]
    let mut v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Exec::Parallel));
    v
}

fn jobs() -> Vec<(&'static str, ProofJob)> {
    vec![
        ("jordan", ProofJob::new("sin(x) - 2*x/pi", 0.0, std::f64::consts::FRAC_PI_2, 1, 1).with_degree(2)),
        ("kurepa", ProofJob::new("KP0*x - kurepaK(x)", 0.0, 1.0, 2, 0)),
    ]
}

fn residual_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual_scan");
    group.sample_size(10);
    for (name, job) in jobs() {
        let norm = normalize_job(&job, LimitStrategy::Richardson).unwrap();
        let iv = job.interval().unwrap();
        let p = Polynomial::new(vec![0.9, -0.5]);
        for (label, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(label, name), &exec, |b, &exec| {
                b.iter(|| infnorm_with(&norm.g, &p, &iv, 4097, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn remez_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("remez_fit");
    group.sample_size(10);
    for (name, job) in jobs() {
        let norm = normalize_job(&job, LimitStrategy::Richardson).unwrap();
        let iv = job.interval().unwrap();
        for (label, exec) in strategies() {
            let opts = RemezOptions {
                exec,
                ..RemezOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(label, name), &opts, |b, opts| {
                b.iter(|| remez_minimax(&norm.g, &iv, job.degree, opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, residual_scan, remez_fit);
criterion_main!(benches);
