// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use noon_core::hamiltonians::segment_generator;
use noon_core::lindblad::Liouvillian;
use noon_core::units::mhz_to_angular;
use noon_core::{
    collapse_operators, initial_state, make_space, run_protocol, CrosstalkMode, NoiseRates,
    PhysicalParams, RunConfig, SegmentKind, C64,
};

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("liouvillian_rhs");
    for nmax in [3usize, 5] {
        let s = make_space(nmax, nmax).unwrap();
        let p = PhysicalParams::imperfect(mhz_to_angular(4.0), mhz_to_angular(300.0));
        let h = segment_generator(SegmentKind::DoublePulse, &p, s, CrosstalkMode::Exact);
        let l =
            Liouvillian::new(&h, &collapse_operators(&NoiseRates::default_device(), s)).unwrap();
        let rho = initial_state(s);
        let mut out = vec![C64::new(0.0, 0.0); s.dim() * s.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(s.dim()), &s, |b, _| {
            b.iter(|| l.apply_hermitian(black_box(1e-9), black_box(rho.elements()), &mut out))
        });
    }
    group.finish();
}

fn protocol(c: &mut Criterion) {
    let mut group = c.benchmark_group("protocol");
    group.sample_size(10);
    for n in [2usize, 4] {
        let cfg = RunConfig::imperfect(n, mhz_to_angular(4.0), mhz_to_angular(300.0));
        group.bench_with_input(BenchmarkId::new("imperfect", n), &cfg, |b, cfg| {
            b.iter(|| run_protocol(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, protocol);
criterion_main!(benches);
