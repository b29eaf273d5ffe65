// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Interaction-picture Hamiltonians of the coupler/cavity system.
//!
//! All operators are in rad/s. The resonant couplings are
//!
//! * `H1 = g1 (a1 σ⁺_eg + h.c.) + g2 (a2 σ⁺_af + h.c.)`
//! * `H4 = g' (a2† σ⁻_ae + h.c.)`
//!
//! the classical drives (initial phase −π/2) are
//!
//! * `H2 = (Ω e^{iπ/2} σ⁺_eg + h.c.) + (Ω e^{iπ/2} σ⁺_af + h.c.) = H5 + H3`
//!
//! and the inter-cavity crosstalk is `ε(t) = g12 (e^{iΔt} a1 a2† + h.c.)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{
    annihilation, creation, transition, Cavity, CompositeSpace, DeviceLevel, SparseOperator, C64,
};
use crate::units::mhz_to_angular;

/// Coupling strengths and drive parameters, all as angular frequencies (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Reference coupling used for the synchronous schedule timings.
    pub g: f64,
    /// Cavity 1 on `|g> <-> |e>`.
    pub g1: f64,
    /// Cavity 2 on `|f> <-> |a>`.
    pub g2: f64,
    /// Cavity 2 on `|e> <-> |a>` (after the step-N retune).
    pub gprime: f64,
    pub omega_rabi: f64,
    pub g12: f64,
    /// Cavity detuning `ω_a2 − ω_a1`.
    pub delta: f64,
}

/// Detuning between the two cavities (3.5 GHz and 5.5 GHz).
pub const DEFAULT_DELTA_MHZ: f64 = 2000.0;

impl PhysicalParams {
    /// Homogeneous couplings `g1 = g2 = g' = g`, no crosstalk.
    pub fn ideal(g: f64, omega_rabi: f64) -> Self {
        Self {
            g,
            g1: g,
            g2: g,
            gprime: g,
            omega_rabi,
            g12: 0.0,
            delta: mhz_to_angular(DEFAULT_DELTA_MHZ),
        }
    }

    /// The imperfect device used for the fidelity figures:
    /// `g1 = 0.95 g`, `g2 = g' = g`, `g12 = 0.1 g`, `Δ/2π = 2 GHz`.
    pub fn imperfect(g: f64, omega_rabi: f64) -> Self {
        Self {
            g1: 0.95 * g,
            g12: 0.1 * g,
            ..Self::ideal(g, omega_rabi)
        }
    }

    /// Changes the reference coupling while keeping `g1/g`, `g2/g`, `g'/g`
    /// and `g12/g` fixed.
    pub fn with_reference_g(&self, g: f64) -> Self {
        let r = if self.g > 0.0 { g / self.g } else { 1.0 };
        Self {
            g,
            g1: self.g1 * r,
            g2: self.g2 * r,
            gprime: self.gprime * r,
            g12: self.g12 * r,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("g1", self.g1),
            ("g2", self.g2),
            ("gprime", self.gprime),
            ("omega_rabi", self.omega_rabi),
            ("g12", self.g12),
            ("delta", self.delta),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("g", self.g),
            ("gprime", self.gprime),
            ("omega_rabi", self.omega_rabi),
        ] {
            if v == 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

/// How the fast-rotating crosstalk term is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrosstalkMode {
    /// Keep `ε(t)` with its explicit `e^{iΔt}` phase.
    Exact,
    /// Drop `ε` whenever `Δ ≠ 0`.
    Averaged,
}

/// The Hamiltonian configuration active during one schedule segment.
///
/// The first six kinds make up the synchronous protocol. The remaining ones
/// only appear in the asynchronous schedule, where the two subspaces
/// (cavity 1 with `|g>,|e>`, cavity 2 with `|f>,|a>`) run independent
/// timelines and one of them may be parked off resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    /// Both cavities resonant: `H1 + ε`.
    ResonantBoth,
    /// `H2 + H1 + ε`.
    DoublePulse,
    /// `H3 + H1 + ε`.
    PulseAF,
    /// Cavity 2 on `|e> <-> |a>`, cavity 1 decoupled: `H4 + ε`.
    ResonantAE,
    /// `H5 + H1 + ε`.
    PulseEG,
    /// Device detuned from both cavities: `ε` only.
    Decoupled,
    /// Only cavity 1 resonant (subspace II parked).
    ResonantEG,
    /// Only cavity 2 resonant (subspace I parked).
    ResonantAF,
    /// `|g>↔|e>` pulse while subspace II keeps its scheduled resonance.
    PulseEGWithAF,
    /// `|f>↔|a>` pulse while subspace I keeps its scheduled resonance.
    PulseAFWithEG,
    /// `|g>↔|e>` pulse with subspace II parked.
    PulseEGAlone,
    /// `|f>↔|a>` pulse with subspace I parked.
    PulseAFAlone,
}

/// A resonant device–cavity coupling term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coupling {
    /// `g1 (a1 σ⁺_eg + h.c.)`
    CavityOneEG,
    /// `g2 (a2 σ⁺_af + h.c.)`
    CavityTwoAF,
    /// `g' (a2† σ⁻_ae + h.c.)`
    CavityTwoAE,
}

/// A classical drive term with initial phase −π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Drive {
    EG,
    AF,
}

/// Whether a coupling is part of the intended evolution in a segment or just
/// left on while a pulse addresses the same subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Scheduled,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recipe {
    pub couplings: &'static [(Coupling, Role)],
    pub drives: &'static [Drive],
}

impl SegmentKind {
    pub fn recipe(self) -> Recipe {
        use Coupling::*;
        use Role::*;
        let (couplings, drives): (&'static [(Coupling, Role)], &'static [Drive]) = match self {
            SegmentKind::ResonantBoth => {
                (&[(CavityOneEG, Scheduled), (CavityTwoAF, Scheduled)], &[])
            }
            SegmentKind::DoublePulse => (
                &[(CavityOneEG, Residual), (CavityTwoAF, Residual)],
                &[Drive::EG, Drive::AF],
            ),
            SegmentKind::PulseAF => (
                &[(CavityOneEG, Residual), (CavityTwoAF, Residual)],
                &[Drive::AF],
            ),
            SegmentKind::ResonantAE => (&[(CavityTwoAE, Scheduled)], &[]),
            SegmentKind::PulseEG => (
                &[(CavityOneEG, Residual), (CavityTwoAF, Residual)],
                &[Drive::EG],
            ),
            SegmentKind::Decoupled => (&[], &[]),
            SegmentKind::ResonantEG => (&[(CavityOneEG, Scheduled)], &[]),
            SegmentKind::ResonantAF => (&[(CavityTwoAF, Scheduled)], &[]),
            SegmentKind::PulseEGWithAF => (
                &[(CavityOneEG, Residual), (CavityTwoAF, Scheduled)],
                &[Drive::EG],
            ),
            SegmentKind::PulseAFWithEG => (
                &[(CavityOneEG, Scheduled), (CavityTwoAF, Residual)],
                &[Drive::AF],
            ),
            SegmentKind::PulseEGAlone => (&[(CavityOneEG, Residual)], &[Drive::EG]),
            SegmentKind::PulseAFAlone => (&[(CavityTwoAF, Residual)], &[Drive::AF]),
        };
        Recipe { couplings, drives }
    }

    pub fn is_pulse(self) -> bool {
        !self.recipe().drives.is_empty()
    }

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::ResonantBoth => "resonant-both",
            SegmentKind::DoublePulse => "double-pulse",
            SegmentKind::PulseAF => "pulse-af",
            SegmentKind::ResonantAE => "resonant-ae",
            SegmentKind::PulseEG => "pulse-eg",
            SegmentKind::Decoupled => "decoupled",
            SegmentKind::ResonantEG => "resonant-eg",
            SegmentKind::ResonantAF => "resonant-af",
            SegmentKind::PulseEGWithAF => "pulse-eg+resonant-af",
            SegmentKind::PulseAFWithEG => "pulse-af+resonant-eg",
            SegmentKind::PulseEGAlone => "pulse-eg-alone",
            SegmentKind::PulseAFAlone => "pulse-af-alone",
        }
    }
}

fn hermitian_pair(x: SparseOperator) -> SparseOperator {
    x.add(&x.dagger()).expect("same space")
}

fn sigma(space: CompositeSpace, to: DeviceLevel, from: DeviceLevel) -> SparseOperator {
    transition(space, to, from).expect("distinct levels")
}

pub fn coupling_term(
    coupling: Coupling,
    params: &PhysicalParams,
    space: CompositeSpace,
) -> SparseOperator {
    use DeviceLevel::*;
    let (strength, x) = match coupling {
        Coupling::CavityOneEG => (
            params.g1,
            annihilation(space, Cavity::One).matmul(&sigma(space, E, G)),
        ),
        Coupling::CavityTwoAF => (
            params.g2,
            annihilation(space, Cavity::Two).matmul(&sigma(space, A, F)),
        ),
        Coupling::CavityTwoAE => (
            params.gprime,
            creation(space, Cavity::Two).matmul(&sigma(space, E, A)),
        ),
    };
    hermitian_pair(x.expect("same space").scale(C64::new(strength, 0.0)))
}

pub fn drive_term(drive: Drive, params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    use DeviceLevel::*;
    // Ω e^{iπ/2} = iΩ
    let amp = C64::new(0.0, params.omega_rabi);
    let x = match drive {
        Drive::EG => sigma(space, E, G),
        Drive::AF => sigma(space, A, F),
    };
    hermitian_pair(x.scale(amp))
}

pub fn h1(params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    coupling_term(Coupling::CavityOneEG, params, space)
        .add(&coupling_term(Coupling::CavityTwoAF, params, space))
        .expect("same space")
}

pub fn h2(params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    h5(params, space)
        .add(&h3(params, space))
        .expect("same space")
}

pub fn h3(params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    drive_term(Drive::AF, params, space)
}

pub fn h4(params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    coupling_term(Coupling::CavityTwoAE, params, space)
}

pub fn h5(params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    drive_term(Drive::EG, params, space)
}

/// `g12 a1 a2†`, the part of `ε(t)` multiplied by `e^{iΔt}`.
fn crosstalk_forward(params: &PhysicalParams, space: CompositeSpace) -> SparseOperator {
    annihilation(space, Cavity::One)
        .matmul(&creation(space, Cavity::Two))
        .expect("same space")
        .scale(C64::new(params.g12, 0.0))
}

/// `ε(t) = g12 (e^{iΔt} a1 a2† + h.c.)` at protocol time `t`.
pub fn crosstalk(params: &PhysicalParams, t: f64, space: CompositeSpace) -> SparseOperator {
    if params.g12 == 0.0 {
        return SparseOperator::zero(space);
    }
    let x = crosstalk_forward(params, space).scale(C64::from_polar(1.0, params.delta * t));
    hermitian_pair(x)
}

/// A Hamiltonian `H(t) = H0 + Σ_k e^{i ω_k t} X_k`.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    pub static_part: SparseOperator,
    /// `(X_k, ω_k)`; terms come in Hermitian-conjugate pairs.
    pub rotating: Vec<(SparseOperator, f64)>,
}

impl TimeDependentHamiltonian {
    pub fn constant(h: SparseOperator) -> Self {
        Self {
            static_part: h,
            rotating: Vec::new(),
        }
    }

    pub fn space(&self) -> CompositeSpace {
        self.static_part.space()
    }

    pub fn at(&self, t: f64) -> SparseOperator {
        self.rotating
            .iter()
            .fold(self.static_part.clone(), |acc, (x, w)| {
                acc.add(&x.scale(C64::from_polar(1.0, w * t)))
                    .expect("same space")
            })
    }

    /// Upper bound on the fastest angular frequency present.
    pub fn frequency_bound(&self) -> f64 {
        let mut b = self.static_part.max_row_sum();
        for (x, w) in &self.rotating {
            b += x.max_row_sum();
            b = b.max(w.abs());
        }
        b
    }
}

/// Which terms of a segment recipe to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum TermFilter {
    All,
    /// Only couplings with [`Role::Scheduled`]; drives and residuals dropped.
    ScheduledCouplings,
}

pub(crate) fn build_segment_generator(
    kind: SegmentKind,
    params: &PhysicalParams,
    space: CompositeSpace,
    mode: CrosstalkMode,
    filter: TermFilter,
) -> TimeDependentHamiltonian {
    let recipe = kind.recipe();
    let mut h = SparseOperator::zero(space);
    for &(c, role) in recipe.couplings {
        if filter == TermFilter::All || role == Role::Scheduled {
            h = h.add(&coupling_term(c, params, space)).expect("same space");
        }
    }
    if filter == TermFilter::All {
        for &d in recipe.drives {
            h = h.add(&drive_term(d, params, space)).expect("same space");
        }
    }

    let mut rotating = Vec::new();
    if params.g12 != 0.0 {
        let x = crosstalk_forward(params, space);
        if params.delta == 0.0 {
            h = h.add(&hermitian_pair(x)).expect("same space");
        } else if mode == CrosstalkMode::Exact {
            rotating.push((x.dagger(), -params.delta));
            rotating.push((x, params.delta));
        }
    }
    TimeDependentHamiltonian {
        static_part: h,
        rotating,
    }
}

/// The full Hamiltonian of a segment, split into static and rotating parts.
pub fn segment_generator(
    kind: SegmentKind,
    params: &PhysicalParams,
    space: CompositeSpace,
    mode: CrosstalkMode,
) -> TimeDependentHamiltonian {
    build_segment_generator(kind, params, space, mode, TermFilter::All)
}

/// The Hamiltonian active during a segment at protocol time `t`.
pub fn segment_hamiltonian(
    kind: SegmentKind,
    params: &PhysicalParams,
    t: f64,
    space: CompositeSpace,
    mode: CrosstalkMode,
) -> SparseOperator {
    segment_generator(kind, params, space, mode).at(t)
}
