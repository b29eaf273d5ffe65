// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::fockspace::DeviceLevel;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error(
        "basis state |{level}, {n1}, {n2}> is outside the truncated space (nmax1 = {nmax1}, nmax2 = {nmax2})"
    )]
    OutOfRange {
        level: DeviceLevel,
        n1: usize,
        n2: usize,
        nmax1: usize,
        nmax2: usize,
    },

    #[error("index ({row}, {col}) is outside a space of dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("a transition needs two distinct levels, got |{0}> twice")]
    SameLevel(DeviceLevel),

    #[error(
        "the protocol needs N >= 2 photons (got N = {0}); for N = 1 the step-N pulse would rotate the untouched |a> branch of the initial state"
    )]
    PhotonNumberTooSmall(usize),

    #[error("photon number {n} exceeds the cavity cutoff {nmax}")]
    TargetExceedsCutoff { n: usize, nmax: usize },

    #[error("asynchronous scheduling needs g1 != g2; use the synchronous schedule instead")]
    SymmetricCouplings,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration diverged in `{segment}`: {quantity} = {value:.3e} exceeds {limit:.1e}; reduce the step size")]
    IntegrationDrift {
        segment: String,
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("overlap <psi|rho|psi> = {re:.3e} + {im:.3e}i is not a valid probability")]
    InvalidOverlap { re: f64, im: f64 },

    #[error("coupling optimisation needs at least one candidate")]
    EmptyCandidates,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

pub type Result<T> = std::result::Result<T, Error>;
