// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use noon_core::hamiltonians::segment_generator;
use noon_core::lindblad::{integrate, Liouvillian, Rk4Workspace};
use noon_core::{
    collapse_operators, evolve_segment, evolve_unitary, h1, ideal_ladder, make_space, noon_target,
    run_protocol, CollapseSet, CrosstalkMode, DensityMatrix, DeviceLevel, NoiseRates,
    PhysicalParams, RunConfig, SegmentKind, StateVector, C64,
};
use DeviceLevel::*;

#[test]
fn rabi_amplitudes_for_low_photon_numbers() {
    let s = make_space(6, 1).unwrap();
    let g = 2.0;
    let h = h1(&PhysicalParams::ideal(g, 1.0), s);
    let mut worst = 0.0_f64;
    for n in 0..=5 {
        let w = ((n + 1) as f64).sqrt() * g;
        let psi0 = StateVector::basis(s, E, n, 0).unwrap();
        for k in 1..=20 {
            let t = k as f64 * (PI / w) / 20.0;
            let out = evolve_unitary(&psi0, &h, t, 1e-3 / w).unwrap();
            let c = C64::new((w * t).cos(), 0.0);
            let d = C64::new(0.0, -(w * t).sin());
            worst = worst
                .max((out.amplitude(E, n, 0) - c).norm())
                .max((out.amplitude(G, n + 1, 0) - d).norm());
        }
    }
    assert!(worst < 1e-6, "max amplitude error {worst:e}");
}

fn rabi_density(s: noon_core::CompositeSpace, w: f64, t: f64) -> DensityMatrix {
    let mut psi = StateVector::zeros(s);
    psi.amplitudes_mut()[s.encode(E, 0, 0).unwrap()] = C64::new((w * t).cos(), 0.0);
    psi.amplitudes_mut()[s.encode(G, 1, 0).unwrap()] = C64::new(0.0, -(w * t).sin());
    psi.to_density()
}

#[test]
fn integrator_is_fourth_order() {
    let s = make_space(2, 1).unwrap();
    let p = PhysicalParams::ideal(1.0, 1.0);
    let h = segment_generator(SegmentKind::ResonantBoth, &p, s, CrosstalkMode::Averaged);
    let l = Liouvillian::new(&h, &CollapseSet::empty(s)).unwrap();
    let rho0 = StateVector::basis(s, E, 0, 0).unwrap().to_density();
    let t = 2.3;
    let exact = rabi_density(s, 1.0, t);
    let mut ws = Rk4Workspace::new(s.dim());
    let mut errors = Vec::new();
    for dt in [0.1, 0.05, 0.025] {
        let mut rho = rho0.clone();
        integrate(&mut rho, &l, 0.0, t, dt, "order", &mut ws).unwrap();
        errors.push(rho.max_abs_diff(&exact));
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (12.0..=20.0).contains(&ratio),
            "ratio {ratio} from {errors:?}"
        );
    }
}

#[test]
fn dissipation_relaxes_to_ground() {
    let s = make_space(2, 2).unwrap();
    let mut rates = NoiseRates::default_device();
    // every channel 50x faster
    for r in [
        &mut rates.kappa1,
        &mut rates.kappa2,
        &mut rates.gamma_ae,
        &mut rates.gamma_af,
        &mut rates.gamma_ag,
        &mut rates.gamma_ef,
        &mut rates.gamma_eg,
        &mut rates.gamma_fg,
        &mut rates.gphi_a,
        &mut rates.gphi_e,
        &mut rates.gphi_f,
    ] {
        *r *= 50.0;
    }
    let mut psi = StateVector::zeros(s);
    psi.amplitudes_mut()[s.encode(A, 2, 1).unwrap()] = C64::new(FRAC_1_SQRT_2, 0.0);
    psi.amplitudes_mut()[s.encode(F, 1, 2).unwrap()] = C64::new(0.0, FRAC_1_SQRT_2);
    let p = PhysicalParams::ideal(1.0, 1.0);
    let rho = evolve_segment(
        &psi.to_density(),
        SegmentKind::Decoupled,
        6e-6,
        0.0,
        &p,
        &rates,
        2e-9,
        CrosstalkMode::Averaged,
    )
    .unwrap();
    assert!(
        rho.population(G, 0, 0) > 0.999,
        "{}",
        rho.population(G, 0, 0)
    );
    assert!((rho.trace().re - 1.0).abs() < 1e-9);
    assert!(rho.min_eigenvalue() > -1e-9);
}

#[test]
fn checkpoints_follow_the_ladder() {
    for n in 2..=4 {
        let cfg = RunConfig::ideal(n, 1.0, 25.0);
        let res = run_protocol(&cfg).unwrap();
        let ladder = ideal_ladder(n, cfg.space().unwrap()).unwrap();
        assert_eq!(res.checkpoints.len(), ladder.len());
        for cp in &res.checkpoints {
            assert!(
                cp.overlap.unwrap() > 1.0 - 1e-8,
                "N={n} {}: {:?}",
                cp.label,
                cp.overlap
            );
        }
        // the last rung is the NOON state with its phase
        let last = ladder.last().unwrap();
        let target = noon_target(cfg.space().unwrap(), n).unwrap();
        assert!((last.inner(&target).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn ideal_run_leaves_device_in_ground_state() {
    let res = run_protocol(&RunConfig::ideal(3, 1.0, 25.0)).unwrap();
    let d = &res.diagnostics;
    assert!((d.device_purity - 1.0).abs() < 1e-6);
    let dev = res.final_state.reduced_device();
    assert!((dev[0][0].re - 1.0).abs() < 1e-6);
    assert!(d.edge_population < 1e-12);
    assert!(res.fidelity > 0.9999);
}

#[test]
fn noisy_generator_preserves_trace_and_hermiticity() {
    let s = make_space(3, 3).unwrap();
    let p = PhysicalParams::imperfect(1e7, 1e9);
    let h = segment_generator(SegmentKind::DoublePulse, &p, s, CrosstalkMode::Exact);
    let l = Liouvillian::new(&h, &collapse_operators(&NoiseRates::default_device(), s)).unwrap();
    let mut rho = noon_core::initial_state(s);
    let mut ws = Rk4Workspace::new(s.dim());
    integrate(&mut rho, &l, 0.0, 5e-9, 1e-11, "noisy", &mut ws).unwrap();
    assert!((rho.trace().re - 1.0).abs() < 1e-9);
    assert!(rho.hermitian_residual() < 1e-12);
    assert!(rho.min_eigenvalue() > -1e-9);
}
