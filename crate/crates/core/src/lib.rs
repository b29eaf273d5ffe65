// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Open-system simulation of photonic NOON-state generation in two cavities
//! coupled through a four-level superconducting device.
//!
//! The crate is organised bottom-up:
//!
//! * [`fockspace`]: the truncated composite space, states and sparse operators
//! * [`hamiltonians`]: resonant couplings, pulse drives and crosstalk
//! * [`lindblad`]: collapse channels and the fixed-step master-equation integrator
//! * [`protocol`]: the (N+1)-step schedule, the analytic ladder and full runs
//! * [`analysis`]: fidelity, diagnostics, sweeps and coupling optimisation
//! * [`selfcheck`]: built-in oracle suite

pub mod analysis;
pub mod error;
pub mod fockspace;
pub mod hamiltonians;
pub mod lindblad;
pub mod protocol;
pub mod selfcheck;
pub mod units;

pub use analysis::{
    best_coupling, diagnostics, fidelity, optimize_g, scan_g, sweep, Diagnostics,
    OptimizedCoupling, SweepAxis, SweepParameter, SweepResult, SweepRow, SweepSpec,
};
pub use error::{Error, Result};
pub use fockspace::{
    annihilation, basis_state, creation, make_space, projector, transition, Cavity, CompositeSpace,
    DensityMatrix, DeviceLevel, SparseOperator, StateVector, C64,
};
pub use hamiltonians::{
    crosstalk, h1, h2, h3, h4, h5, segment_hamiltonian, CrosstalkMode, PhysicalParams, SegmentKind,
};
pub use lindblad::{
    collapse_operators, evolve_segment, evolve_unitary, liouvillian_rhs, CollapseSet, NoiseRates,
    StepPolicy,
};
pub use protocol::{
    build_schedule, build_schedule_async, ideal_ladder, initial_state, noon_target, run_protocol,
    Checkpoint, ProtocolSchedule, PulseModel, RunConfig, RunResult, ScheduleMode, Segment,
};

/// Engine version recorded in output provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
