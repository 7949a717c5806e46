use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use iso_landau::diagnostics::{default_probe_family, dissipation_double_oracle, poincare_probe};
use iso_landau::geometry::{w1_lp_oracle, CloudSpec};
use iso_landau::potential::{potential_oracle_3d, sample_radial_cloud};
use iso_landau::{init, Exec, RadialGrid};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn double_oracle(c: &mut Criterion) {
    let g = RadialGrid::uniform(513, 12.0).unwrap();
    let rho = init::gaussian(&g, 1.0, true).unwrap();
    let mut group = c.benchmark_group("dissipation_double_oracle_n513");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| dissipation_double_oracle(&g, black_box(&rho), exec).unwrap()));
    }
    group.finish();
}

fn cartesian_potential(c: &mut Criterion) {
    let (samples, vol) = sample_radial_cloud(24, 6.0, |r| (-r * r / 2.0).exp());
    let queries: Vec<[f64; 3]> = (0..64).map(|k| [0.1 * k as f64, 0.0, 0.0]).collect();
    let mut group = c.benchmark_group("potential_oracle_3d_24cubed");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| potential_oracle_3d(black_box(&samples), vol, &queries, exec).unwrap()));
    }
    group.finish();
}

fn transport(c: &mut Criterion) {
    let g = RadialGrid::uniform(513, 4.0).unwrap();
    let a = init::uniform_ball(&g, 1.0).unwrap();
    let b = init::uniform_ball(&g, 1.5).unwrap();
    let spec = CloudSpec { m: 6, half_width0: 1.0, half_width1: 1.5 };
    let mut group = c.benchmark_group("w1_lp_oracle_m6");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |bch| bch.iter(|| w1_lp_oracle(black_box(&a), &b, &spec, exec).unwrap()));
    }
    group.finish();
}

fn probes(c: &mut Criterion) {
    let g = RadialGrid::uniform(2049, 12.0).unwrap();
    let rho = init::gaussian(&g, 1.0, true).unwrap();
    let phis = default_probe_family(&g);
    let mut group = c.benchmark_group("poincare_probe_n2049");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| poincare_probe(&g, black_box(&rho), &phis, 0.1, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, double_oracle, cartesian_potential, transport, probes);
criterion_main!(benches);
