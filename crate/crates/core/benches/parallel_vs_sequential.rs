use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hedgehog::rng::seeded_rng;
use hedgehog::sweep::sweep_trials;
use hedgehog::tomography::round_trip_batch;
use hedgehog::{random_constellation, repair_with, Backend, HermitianOperator, RepairOptions, SpinLabel, Threshold};

const BACKENDS: [(&str, Backend); 2] = [("sequential", Backend::Sequential), ("parallel", Backend::Parallel)];

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for doubled in [2, 4] {
        let s = SpinLabel::from_doubled(doubled);
        for (name, backend) in BACKENDS {
            group.bench_with_input(BenchmarkId::new(name, format!("s={s}")), &s, |b, &s| {
                b.iter(|| sweep_trials(s, 64, 1, Threshold::Relative(1e-12), backend))
            });
        }
    }
    group.finish();
}

fn bench_round_trip(c: &mut Criterion) {
    let mut group = c.benchmark_group("round_trip_batch");
    group.sample_size(10);
    let s = SpinLabel::from_doubled(4);
    let m = random_constellation(s, 3);
    let mut rng = seeded_rng(5);
    let ops: Vec<HermitianOperator> = (0..64).map(|_| HermitianOperator::random(s, &mut rng)).collect();
    for (name, backend) in BACKENDS {
        group.bench_function(name, |b| {
            b.iter(|| round_trip_batch(&ops, &m, Threshold::Default, backend).unwrap())
        });
    }
    group.finish();
}

fn bench_repair(c: &mut Criterion) {
    let mut group = c.benchmark_group("repair");
    group.sample_size(10);
    let base = random_constellation(SpinLabel::ONE, 8);
    let m = base.replace_vector(4, base.vectors()[0]).unwrap();
    for (name, backend) in BACKENDS {
        let mut opts = RepairOptions::new(1e-3, Threshold::Relative(1e-12), 2);
        opts.backend = backend;
        group.bench_function(name, |b| b.iter(|| repair_with(&m, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_round_trip, bench_repair);
criterion_main!(benches);
