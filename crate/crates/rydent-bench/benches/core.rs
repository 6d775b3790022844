use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rydent::hamiltonian::{build, Storage};
use rydent::{
    evolve, ground_state, probabilities, report, sample, standard_schedule, BasisConvention,
    DriveParams, EvolutionConfig, Geometry, Partition, PartitionMode, ScheduleVariant, StateVector,
    TimeDependentHamiltonian,
};

fn params() -> DriveParams {
    DriveParams::working_point()
}

fn bench_ground_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_state");
    group.sample_size(10);
    for n in [8usize, 10] {
        let geometry = Geometry::chain(n, 8.375 / 1.5).unwrap();
        let h = build(&geometry, &params(), Storage::Sparse).unwrap();
        let tol = 1e-10 * h.norm_bound().max(1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| ground_state(h, tol, 1).unwrap())
        });
    }
    group.finish();
}

fn bench_entropy_report(c: &mut Criterion) {
    let geometry = Geometry::chain(10, 8.375 / 1.5).unwrap();
    let h = build(&geometry, &params(), Storage::Sparse).unwrap();
    let state = ground_state(&h, 1e-8, 1).unwrap().state;
    let partition = Partition::new(&geometry, PartitionMode::ChainHalves).unwrap();
    c.bench_function("entropy_report_n10", |b| {
        b.iter(|| report(&state, &partition).unwrap())
    });
}

fn bench_evolution(c: &mut Criterion) {
    let geometry = Geometry::chain(8, 8.375 / 1.5).unwrap();
    let p = params();
    let schedule = standard_schedule(&p, ScheduleVariant::Lsnrd, 4.0).unwrap();
    let h = TimeDependentHamiltonian::new(&geometry, &p, schedule.clone()).unwrap();
    let config = EvolutionConfig {
        dt: h.stable_dt(1e-3),
        renormalize: true,
        norm_drift_tol: 1e-6,
    };
    let initial = StateVector::all_ground(BasisConvention::new(8));
    let mut group = c.benchmark_group("evolve_lsnrd_4us_n8");
    group.sample_size(10);
    group.bench_function("rk4", |b| {
        b.iter(|| evolve(&initial, &geometry, &p, &schedule, &config).unwrap())
    });
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let geometry = Geometry::chain(10, 8.375 / 1.5).unwrap();
    let h = build(&geometry, &params(), Storage::Sparse).unwrap();
    let state = ground_state(&h, 1e-8, 1).unwrap().state;
    let p = probabilities(&state);
    c.bench_function("sample_1000_shots_n10", |b| {
        b.iter(|| sample(&p, 1000, 7).unwrap())
    });
}

criterion_group!(
    benches,
    bench_ground_state,
    bench_entropy_report,
    bench_evolution,
    bench_sampling
);
criterion_main!(benches);
