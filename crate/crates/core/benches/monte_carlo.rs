use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use subghz_phy::exec::Execution;
use subghz_phy::harness::{run_ber_experiment, run_chip_ber, run_per_experiment, ExperimentConfig};
use subghz_phy::rateplan::Band;

fn config(exec: Execution) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Band::Band868);
    cfg.exec = exec;
    cfg.snr_points_db = [6.0, 8.0, 10.0]
        .iter()
        .map(|&e| cfg.snr_for_ebn0(e))
        .collect();
    cfg.min_bits_per_point = 8_000;
    cfg.frames_per_point = 8;
    cfg
}

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        let cfg = config(exec);
        group.bench_with_input(BenchmarkId::new("ber_full_sync", name), &cfg, |b, cfg| {
            b.iter(|| black_box(run_ber_experiment(cfg).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("per_full_sync", name), &cfg, |b, cfg| {
            b.iter(|| black_box(run_per_experiment(cfg).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("chip_ber_genie", name), &cfg, |b, cfg| {
            b.iter(|| black_box(run_chip_ber(cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
