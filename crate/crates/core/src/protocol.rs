// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! The (N+1)-step NOON-state protocol: timed schedules, the analytic state
//! ladder and the full open-system run.
//!
//! Steps 1..N−1 drive both cavities at once. Each of them is a resonant
//! segment of length `π/(2√j g)` that emits one photon per branch, followed
//! (except after step N−1) by a double π-pulse that pumps `|g>→|e>` and
//! `|f>→|a>` for the next emission. Step N flips `|f>→|a>` and retunes the
//! device so that cavity 2 couples to `|e>↔|a>` for `π/(2√N g')`. Step N+1
//! flips `|g>↔|e>`, returns to the original configuration and waits
//! `3π/(2√N g)`, leaving `|g>(|N,0> + |0,N>)/√2` up to a global phase.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::analysis::{diagnostics, fidelity, Diagnostics};
use crate::error::{Error, Result};
use crate::fockspace::{
    CompositeSpace, DensityMatrix, DeviceLevel, SparseOperator, StateVector, C64, ONE, ZERO,
};
use crate::hamiltonians::{
    build_segment_generator, CrosstalkMode, Drive, PhysicalParams, SegmentKind, TermFilter,
};
use crate::lindblad::{
    collapse_operators, integrate, CollapseSet, Liouvillian, NoiseRates, Rk4Workspace, StepPolicy,
};

/// Truncation-edge population tolerated at the end of a run. Default cutoffs
/// grow until the edge stays below it; runs above it carry a warning.
pub const EDGE_TOLERANCE: f64 = 1e-3;

/// Largest headroom `nmax − N` the default cutoffs grow to.
pub const MAX_HEADROOM: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Seconds.
    pub duration: f64,
    /// Seconds since the start of the protocol.
    pub t_start: f64,
    pub label: String,
}

impl Segment {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub n: usize,
    pub segments: Vec<Segment>,
    pub total_time: f64,
}

struct ScheduleBuilder {
    segments: Vec<Segment>,
    clock: f64,
}

impl ScheduleBuilder {
    fn new() -> Self {
        Self {
            segments: Vec::new(),
            clock: 0.0,
        }
    }

    fn push(&mut self, kind: SegmentKind, duration: f64, label: String) {
        self.segments.push(Segment {
            kind,
            duration,
            t_start: self.clock,
            label,
        });
        self.clock += duration;
    }

    fn finish(self, n: usize) -> ProtocolSchedule {
        ProtocolSchedule {
            n,
            total_time: self.clock,
            segments: self.segments,
        }
    }
}

pub fn pulse_duration(params: &PhysicalParams) -> f64 {
    PI / (2.0 * params.omega_rabi)
}

/// Half a Rabi oscillation on the j-photon transition: `π/(2√j g)`.
pub fn emission_time(j: usize, g: f64) -> f64 {
    PI / (2.0 * (j as f64).sqrt() * g)
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::PhotonNumberTooSmall(n));
    }
    Ok(())
}

fn push_final_steps(b: &mut ScheduleBuilder, n: usize, params: &PhysicalParams, cavity_one_g: f64) {
    let tau = pulse_duration(params);
    b.push(SegmentKind::PulseAF, tau, format!("step {n} / pulse af"));
    b.push(
        SegmentKind::ResonantAE,
        emission_time(n, params.gprime),
        format!("step {n} / resonant ae"),
    );
    b.push(
        SegmentKind::PulseEG,
        tau,
        format!("step {} / pulse eg", n + 1),
    );
    b.push(
        SegmentKind::ResonantBoth,
        3.0 * emission_time(n, cavity_one_g),
        format!("step {} / resonant", n + 1),
    );
}

/// Synchronous schedule with every timing taken from the reference `g`.
///
/// Produces `2N + 1` segments: steps 1..N−2 contribute a resonant segment and
/// a double pulse, step N−1 only its resonant segment, steps N and N+1 a
/// pulse and a resonant segment each.
pub fn build_schedule(n: usize, params: &PhysicalParams) -> Result<ProtocolSchedule> {
    check_n(n)?;
    params.validate()?;
    let mut b = ScheduleBuilder::new();
    let tau = pulse_duration(params);
    for j in 1..n {
        b.push(
            SegmentKind::ResonantBoth,
            emission_time(j, params.g),
            format!("step {j} / resonant"),
        );
        if j + 1 < n {
            b.push(
                SegmentKind::DoublePulse,
                tau,
                format!("step {j} / double pulse"),
            );
        }
    }
    push_final_steps(&mut b, n, params, params.g);
    Ok(b.finish(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activity {
    Resonant,
    Pulsed,
    Parked,
}

/// Interval timeline of one subspace during steps 1..N−1.
fn subspace_timeline(n: usize, g: f64, tau: f64) -> Vec<(f64, f64, Activity)> {
    let mut out = Vec::new();
    let mut t = 0.0;
    for j in 1..n {
        let d = emission_time(j, g);
        out.push((t, t + d, Activity::Resonant));
        t += d;
        if j + 1 < n {
            out.push((t, t + tau, Activity::Pulsed));
            t += tau;
        }
    }
    out
}

fn activity_at(timeline: &[(f64, f64, Activity)], t: f64) -> Activity {
    timeline
        .iter()
        .find(|&&(a, b, _)| t >= a && t < b)
        .map(|&(_, _, act)| act)
        .unwrap_or(Activity::Parked)
}

fn merged_kind(one: Activity, two: Activity) -> Option<SegmentKind> {
    use Activity::*;
    Some(match (one, two) {
        (Resonant, Resonant) => SegmentKind::ResonantBoth,
        (Pulsed, Pulsed) => SegmentKind::DoublePulse,
        (Pulsed, Resonant) => SegmentKind::PulseEGWithAF,
        (Resonant, Pulsed) => SegmentKind::PulseAFWithEG,
        (Resonant, Parked) => SegmentKind::ResonantEG,
        (Parked, Resonant) => SegmentKind::ResonantAF,
        (Pulsed, Parked) => SegmentKind::PulseEGAlone,
        (Parked, Pulsed) => SegmentKind::PulseAFAlone,
        (Parked, Parked) => return None,
    })
}

/// Asynchronous schedule for unequal couplings.
///
/// Subspace I (cavity 1, `|g>,|e>`) and subspace II (cavity 2, `|f>,|a>`)
/// each follow their own emission times `π/(2√j g1)` and `π/(2√j g2)` with
/// independent single pulses. The subspace that finishes first is parked off
/// resonance until the other one catches up; steps N and N+1 then follow the
/// synchronous recipe, with the final wait timed by `g1`.
pub fn build_schedule_async(n: usize, params: &PhysicalParams) -> Result<ProtocolSchedule> {
    check_n(n)?;
    params.validate()?;
    if params.g1 == params.g2 {
        return Err(Error::SymmetricCouplings);
    }
    for (name, v) in [("g1", params.g1), ("g2", params.g2)] {
        if v <= 0.0 {
            return Err(Error::InvalidParameter {
                name,
                reason: "must be positive for the asynchronous schedule".into(),
            });
        }
    }
    let tau = pulse_duration(params);
    let one = subspace_timeline(n, params.g1, tau);
    let two = subspace_timeline(n, params.g2, tau);

    let mut cuts: Vec<f64> = one
        .iter()
        .chain(&two)
        .flat_map(|&(a, b, _)| [a, b])
        .collect();
    cuts.sort_by(f64::total_cmp);
    let end = *cuts.last().unwrap_or(&0.0);
    let eps = 1e-12 * end;
    cuts.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let mut b = ScheduleBuilder::new();
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        if let Some(kind) = merged_kind(activity_at(&one, mid), activity_at(&two, mid)) {
            let k = b.segments.len() + 1;
            b.push(
                kind,
                t1 - t0,
                format!("steps 1-{} / {} #{k}", n - 1, kind.name()),
            );
        }
    }
    push_final_steps(&mut b, n, params, params.g1);
    Ok(b.finish(n))
}

/// `(|e> + |a>)/√2 ⊗ |0>|0>` as a density matrix.
pub fn initial_state(space: CompositeSpace) -> DensityMatrix {
    initial_vector(space).to_density()
}

fn initial_vector(space: CompositeSpace) -> StateVector {
    let mut psi = StateVector::zeros(space);
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    psi.amplitudes_mut()[space.index(DeviceLevel::E, 0, 0)] = r;
    psi.amplitudes_mut()[space.index(DeviceLevel::A, 0, 0)] = r;
    psi
}

/// `(−i)^{N+2}/√2 |g>(|N,0> + |0,N>)`.
pub fn noon_target(space: CompositeSpace, n: usize) -> Result<StateVector> {
    let nmax = space.nmax1().min(space.nmax2());
    if n > nmax {
        return Err(Error::TargetExceedsCutoff { n, nmax });
    }
    let phase = minus_i_pow(n + 2) * FRAC_1_SQRT_2;
    let mut psi = StateVector::zeros(space);
    psi.amplitudes_mut()[space.index(DeviceLevel::G, n, 0)] += phase;
    psi.amplitudes_mut()[space.index(DeviceLevel::G, 0, n)] += phase;
    Ok(psi)
}

pub(crate) fn minus_i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => C64::new(0.0, -1.0),
        2 => -ONE,
        _ => C64::new(0.0, 1.0),
    }
}

/// Closed-form evolutions used to build the reference ladder.
mod closed_form {
    use super::*;

    /// `exp(−iθ(|x><y| + |y><x|))` on one pair of basis states.
    fn exchange(amp: &mut [C64], x: usize, y: usize, theta: f64) {
        let (c, s) = (theta.cos(), theta.sin());
        let (ax, ay) = (amp[x], amp[y]);
        let mi = C64::new(0.0, -s);
        amp[x] = ax * c + ay * mi;
        amp[y] = ay * c + ax * mi;
    }

    /// `|lo> → cos θ |lo> + sin θ |hi>`, `|hi> → −sin θ |lo> + cos θ |hi>`.
    fn rotate(amp: &mut [C64], lo: usize, hi: usize, theta: f64) {
        let (c, s) = (theta.cos(), theta.sin());
        let (al, ah) = (amp[lo], amp[hi]);
        amp[lo] = al * c - ah * s;
        amp[hi] = ah * c + al * s;
    }

    /// `|e,n1,n2> ↔ |g,n1+1,n2>` at `g1√(n1+1)` and `|a,n1,n2> ↔ |f,n1,n2+1>` at `g2√(n2+1)`.
    pub fn resonant_both(psi: &mut StateVector, g1: f64, g2: f64, t: f64) {
        use DeviceLevel::*;
        let s = psi.space();
        let amp = psi.amplitudes_mut();
        for n1 in 0..=s.nmax1() {
            for n2 in 0..=s.nmax2() {
                if n1 < s.nmax1() {
                    let w = g1 * ((n1 + 1) as f64).sqrt() * t;
                    exchange(amp, s.index(E, n1, n2), s.index(G, n1 + 1, n2), w);
                }
                if n2 < s.nmax2() {
                    let w = g2 * ((n2 + 1) as f64).sqrt() * t;
                    exchange(amp, s.index(A, n1, n2), s.index(F, n1, n2 + 1), w);
                }
            }
        }
    }

    /// `|a,n1,n2> ↔ |e,n1,n2+1>` at `g'√(n2+1)`.
    pub fn resonant_ae(psi: &mut StateVector, gprime: f64, t: f64) {
        use DeviceLevel::*;
        let s = psi.space();
        let amp = psi.amplitudes_mut();
        for n1 in 0..=s.nmax1() {
            for n2 in 0..s.nmax2() {
                let w = gprime * ((n2 + 1) as f64).sqrt() * t;
                exchange(amp, s.index(A, n1, n2), s.index(E, n1, n2 + 1), w);
            }
        }
    }

    pub fn drive(psi: &mut StateVector, drive: Drive, theta: f64) {
        use DeviceLevel::*;
        let s = psi.space();
        let (lo, hi) = match drive {
            Drive::EG => (G, E),
            Drive::AF => (F, A),
        };
        let amp = psi.amplitudes_mut();
        for n1 in 0..=s.nmax1() {
            for n2 in 0..=s.nmax2() {
                rotate(amp, s.index(lo, n1, n2), s.index(hi, n1, n2), theta);
            }
        }
    }
}

/// The exact state after every segment of the synchronous, homogeneous
/// protocol, obtained from the closed-form two-level evolutions.
pub fn ideal_ladder(n: usize, space: CompositeSpace) -> Result<Vec<StateVector>> {
    check_n(n)?;
    let nmax = space.nmax1().min(space.nmax2());
    if n > nmax {
        return Err(Error::TargetExceedsCutoff { n, nmax });
    }
    // Unit couplings; only the products g·t matter.
    let unit = PhysicalParams::ideal(1.0, 1.0);
    let schedule = build_schedule(n, &unit)?;
    let mut psi = initial_vector(space);
    let mut out = Vec::with_capacity(schedule.segments.len());
    for seg in &schedule.segments {
        match seg.kind {
            SegmentKind::ResonantBoth => {
                closed_form::resonant_both(&mut psi, 1.0, 1.0, seg.duration)
            }
            SegmentKind::ResonantAE => closed_form::resonant_ae(&mut psi, 1.0, seg.duration),
            SegmentKind::DoublePulse => {
                closed_form::drive(&mut psi, Drive::EG, PI / 2.0);
                closed_form::drive(&mut psi, Drive::AF, PI / 2.0);
            }
            SegmentKind::PulseAF => closed_form::drive(&mut psi, Drive::AF, PI / 2.0),
            SegmentKind::PulseEG => closed_form::drive(&mut psi, Drive::EG, PI / 2.0),
            other => unreachable!("synchronous schedule never contains {other:?}"),
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// Pulse treatment during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseModel {
    /// Integrate through the pulse with residual couplings and noise active.
    Dynamic,
    /// Apply the exact two-level rotation. Residual couplings are dropped;
    /// scheduled couplings of the other subspace and dissipation still act
    /// for the pulse duration.
    Instantaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Synchronous,
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub params: PhysicalParams,
    pub rates: NoiseRates,
    /// Photon cutoffs; `None` means `N + 1` for both cavities.
    pub nmax: Option<(usize, usize)>,
    pub step_policy: StepPolicy,
    pub crosstalk: CrosstalkMode,
    pub pulses: PulseModel,
    pub schedule: ScheduleMode,
}

impl RunConfig {
    /// Homogeneous couplings, no crosstalk, no noise, instantaneous pulses.
    pub fn ideal(n: usize, g: f64, omega_rabi: f64) -> Self {
        Self {
            n,
            params: PhysicalParams::ideal(g, omega_rabi),
            rates: NoiseRates::none(),
            nmax: None,
            step_policy: StepPolicy::FINE,
            crosstalk: CrosstalkMode::Averaged,
            pulses: PulseModel::Instantaneous,
            schedule: ScheduleMode::Synchronous,
        }
    }

    /// The imperfect device with default noise, averaged crosstalk and
    /// dynamic pulses.
    pub fn imperfect(n: usize, g: f64, omega_rabi: f64) -> Self {
        Self {
            params: PhysicalParams::imperfect(g, omega_rabi),
            rates: NoiseRates::default_device(),
            pulses: PulseModel::Dynamic,
            step_policy: StepPolicy::default(),
            ..Self::ideal(n, g, omega_rabi)
        }
    }

    /// Photon cutoffs of the first attempt: `N + 1` with ideal rotations and
    /// `N + 2` with integrated pulses unless `nmax` is set. [`run_protocol`]
    /// grows default cutoffs further when needed.
    pub fn cutoffs(&self) -> (usize, usize) {
        let headroom = match self.pulses {
            PulseModel::Instantaneous => 1,
            PulseModel::Dynamic => 2,
        };
        self.nmax.unwrap_or((self.n + headroom, self.n + headroom))
    }

    pub fn space(&self) -> Result<CompositeSpace> {
        let (a, b) = self.cutoffs();
        CompositeSpace::new(a, b)
    }

    pub fn validate(&self) -> Result<()> {
        check_n(self.n)?;
        self.params.validate()?;
        self.rates.validate()?;
        let (a, b) = self.cutoffs();
        if a.min(b) < self.n {
            return Err(Error::TargetExceedsCutoff {
                n: self.n,
                nmax: a.min(b),
            });
        }
        if !(self.step_policy.steps_per_period.is_finite()
            && self.step_policy.steps_per_period > 0.0)
        {
            return Err(Error::InvalidParameter {
                name: "steps_per_period",
                reason: format!(
                    "must be positive, got {}",
                    self.step_policy.steps_per_period
                ),
            });
        }
        Ok(())
    }

    pub fn build_schedule(&self) -> Result<ProtocolSchedule> {
        match self.schedule {
            ScheduleMode::Synchronous => build_schedule(self.n, &self.params),
            ScheduleMode::Asynchronous => build_schedule_async(self.n, &self.params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub label: String,
    pub kind: SegmentKind,
    pub t_end: f64,
    /// `<ψ_k|ρ|ψ_k>` against the ideal ladder; absent for asynchronous runs.
    pub overlap: Option<f64>,
}

impl Checkpoint {
    pub fn fidelity(&self) -> Option<f64> {
        self.overlap.map(|o| o.clamp(0.0, 1.0).sqrt())
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Photon cutoffs of the reported run.
    pub nmax: (usize, usize),
    pub final_state: DensityMatrix,
    pub fidelity: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub diagnostics: Diagnostics,
    /// Largest `|Tr ρ − 1|` seen after any segment.
    pub max_trace_drift: f64,
    pub warnings: Vec<String>,
    pub schedule: ProtocolSchedule,
    pub wall_time: Duration,
}

/// `U = exp(−i Σ_drives H_drive θ/Ω)` restricted to the driven pairs.
fn pulse_unitary(space: CompositeSpace, drives: &[Drive], theta: f64) -> SparseOperator {
    use DeviceLevel::*;
    let (c, s) = (C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0));
    let mut t = Vec::new();
    let mut touched = vec![false; space.dim()];
    for &d in drives {
        let (lo, hi) = match d {
            Drive::EG => (G, E),
            Drive::AF => (F, A),
        };
        for n1 in 0..=space.nmax1() {
            for n2 in 0..=space.nmax2() {
                let (l, h) = (space.index(lo, n1, n2), space.index(hi, n1, n2));
                t.extend([(l, l, c), (h, l, s), (l, h, -s), (h, h, c)]);
                touched[l] = true;
                touched[h] = true;
            }
        }
    }
    t.extend(
        (0..space.dim())
            .filter(|&i| !touched[i])
            .map(|i| (i, i, ONE)),
    );
    SparseOperator::from_triplets(space, t).expect("indices inside the space")
}

/// `U ρ U†`.
fn conjugate(rho: &DensityMatrix, u: &SparseOperator) -> DensityMatrix {
    let d = rho.dim();
    let r = rho.elements();
    let mut tmp = vec![ZERO; d * d];
    for (i, k, v) in u.entries() {
        for j in 0..d {
            tmp[i * d + j] += v * r[k * d + j];
        }
    }
    let mut out = vec![ZERO; d * d];
    for (j, l, v) in u.entries() {
        let vc = v.conj();
        for i in 0..d {
            out[i * d + j] += tmp[i * d + l] * vc;
        }
    }
    DensityMatrix::from_elements(rho.space(), out).expect("same dimension")
}

struct Compiled {
    liouvillian: Liouvillian,
    max_dt: f64,
    trivial: bool,
}

fn compile(
    kind: SegmentKind,
    filter: TermFilter,
    config: &RunConfig,
    space: CompositeSpace,
    collapses: &CollapseSet,
) -> Result<Compiled> {
    let h = build_segment_generator(kind, &config.params, space, config.crosstalk, filter);
    let trivial = h.static_part.is_zero() && h.rotating.is_empty() && collapses.is_empty();
    let liouvillian = Liouvillian::new(&h, collapses)?;
    let max_dt = config.step_policy.max_step(&liouvillian);
    Ok(Compiled {
        liouvillian,
        max_dt,
        trivial,
    })
}

/// Runs the whole protocol for one configuration.
///
/// Without explicit `nmax` the run is repeated with one more photon per
/// cavity while the truncation-edge population is at least
/// [`EDGE_TOLERANCE`], up to `N +` [`MAX_HEADROOM`].
pub fn run_protocol(config: &RunConfig) -> Result<RunResult> {
    let started = Instant::now();
    config.validate()?;
    let (mut a, mut b) = config.cutoffs();
    loop {
        let mut r = run_with_cutoffs(config, CompositeSpace::new(a, b)?)?;
        let grow = config.nmax.is_none()
            && r.diagnostics.edge_population >= EDGE_TOLERANCE
            && a.max(b) < config.n + MAX_HEADROOM;
        if !grow {
            if r.diagnostics.edge_population > EDGE_TOLERANCE {
                r.warnings.push(format!(
                    "truncation-edge population {:.3e} exceeds {:.0e}; raise nmax",
                    r.diagnostics.edge_population, EDGE_TOLERANCE
                ));
            }
            r.wall_time = started.elapsed();
            return Ok(r);
        }
        a += 1;
        b += 1;
    }
}

fn run_with_cutoffs(config: &RunConfig, space: CompositeSpace) -> Result<RunResult> {
    let schedule = config.build_schedule()?;
    let collapses = collapse_operators(&config.rates, space);
    let ladder = match config.schedule {
        ScheduleMode::Synchronous => Some(ideal_ladder(config.n, space)?),
        ScheduleMode::Asynchronous => None,
    };

    let mut cache: HashMap<(SegmentKind, TermFilter), Compiled> = HashMap::new();
    let mut ws = Rk4Workspace::new(space.dim());
    let mut rho = initial_state(space);
    let mut checkpoints = Vec::with_capacity(schedule.segments.len());
    let mut max_trace_drift = 0.0_f64;

    for (k, seg) in schedule.segments.iter().enumerate() {
        let instantaneous = config.pulses == PulseModel::Instantaneous && seg.kind.is_pulse();
        if instantaneous {
            let theta = config.params.omega_rabi * seg.duration;
            rho = conjugate(&rho, &pulse_unitary(space, seg.kind.recipe().drives, theta));
        }
        let filter = if instantaneous {
            TermFilter::ScheduledCouplings
        } else {
            TermFilter::All
        };
        let key = (seg.kind, filter);
        let c = match cache.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(compile(seg.kind, filter, config, space, &collapses)?),
        };
        if !c.trivial {
            integrate(
                &mut rho,
                &c.liouvillian,
                seg.t_start,
                seg.duration,
                c.max_dt,
                &seg.label,
                &mut ws,
            )?;
        }
        max_trace_drift = max_trace_drift.max((rho.trace().re - 1.0).abs());

        let overlap = match &ladder {
            Some(l) => Some(rho.overlap(&l[k])?.re),
            None => None,
        };
        checkpoints.push(Checkpoint {
            label: seg.label.clone(),
            kind: seg.kind,
            t_end: seg.t_end(),
            overlap,
        });
    }

    let target = noon_target(space, config.n)?;
    let f = fidelity(&rho, &target)?;
    let diag = diagnostics(&rho);
    Ok(RunResult {
        nmax: (space.nmax1(), space.nmax2()),
        final_state: rho,
        fidelity: f,
        checkpoints,
        diagnostics: diag,
        max_trace_drift,
        warnings: Vec::new(),
        schedule,
        wall_time: Duration::ZERO,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::make_space;
    use crate::units::mhz_to_angular;
    use DeviceLevel::*;

    fn ket(s: CompositeSpace, terms: &[(C64, DeviceLevel, usize, usize)]) -> StateVector {
        let mut psi = StateVector::zeros(s);
        for &(c, l, a, b) in terms {
            psi.amplitudes_mut()[s.index(l, a, b)] += c;
        }
        psi
    }

    fn close(a: &StateVector, b: &StateVector) -> f64 {
        a.clone().add_scaled(-ONE, b).unwrap().norm()
    }

    #[test]
    fn schedule_shapes() {
        let p = PhysicalParams::ideal(mhz_to_angular(4.0), mhz_to_angular(300.0));
        let s2 = build_schedule(2, &p).unwrap();
        assert_eq!(s2.segments.len(), 5);
        let resonant: Vec<f64> = s2
            .segments
            .iter()
            .filter(|s| !s.kind.is_pulse())
            .map(|s| s.duration)
            .collect();
        let g = p.g;
        let want = [
            PI / (2.0 * g),
            PI / (2.0 * 2f64.sqrt() * p.gprime),
            3.0 * PI / (2.0 * 2f64.sqrt() * g),
        ];
        assert_eq!(resonant.len(), 3);
        for (a, b) in resonant.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
        assert_eq!(build_schedule(6, &p).unwrap().segments.len(), 13);
        assert!(matches!(
            build_schedule(1, &p),
            Err(Error::PhotonNumberTooSmall(1))
        ));
    }

    #[test]
    fn first_emission_time_at_4_mhz() {
        // π / (2 · 2π · 4e6 s⁻¹) = 1 / 16e6 s = 62.5 ns
        let p = PhysicalParams::ideal(mhz_to_angular(4.0), mhz_to_angular(300.0));
        let s = build_schedule(6, &p).unwrap();
        assert!((s.segments[0].duration - 62.5e-9).abs() < 1e-20);
    }

    #[test]
    fn schedule_invariants() {
        let p = PhysicalParams {
            gprime: 0.8,
            ..PhysicalParams::ideal(1.3, 40.0)
        };
        let mut prev_total = 0.0;
        for n in 2..=10 {
            let s = build_schedule(n, &p).unwrap();
            assert_eq!(s.segments.len(), 2 * n + 1);
            for w in s.segments.windows(2) {
                assert_eq!(w[1].t_start, w[0].t_end());
            }
            let mut j = 0;
            for seg in &s.segments {
                match seg.kind {
                    SegmentKind::DoublePulse | SegmentKind::PulseAF | SegmentKind::PulseEG => {
                        assert_eq!(seg.duration, PI / (2.0 * p.omega_rabi))
                    }
                    SegmentKind::ResonantBoth if j < n - 1 => {
                        j += 1;
                        assert_eq!(seg.duration, PI / (2.0 * (j as f64).sqrt() * p.g));
                    }
                    SegmentKind::ResonantBoth => {
                        let want = 3.0 * PI / (2.0 * (n as f64).sqrt() * p.g);
                        assert!((seg.duration - want).abs() <= 1e-15 * want)
                    }
                    SegmentKind::ResonantAE => {
                        assert_eq!(seg.duration, PI / (2.0 * (n as f64).sqrt() * p.gprime))
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            let kinds: Vec<_> = s.segments[s.segments.len() - 4..]
                .iter()
                .map(|s| s.kind)
                .collect();
            assert_eq!(
                kinds,
                [
                    SegmentKind::PulseAF,
                    SegmentKind::ResonantAE,
                    SegmentKind::PulseEG,
                    SegmentKind::ResonantBoth
                ]
            );
            assert!(s.total_time > prev_total);
            prev_total = s.total_time;
        }
    }

    #[test]
    fn initial_state_elements() {
        let s = make_space(3, 3).unwrap();
        let rho = initial_state(s);
        assert!((rho.population(E, 0, 0) - 0.5).abs() < 1e-15);
        assert!((rho.population(A, 0, 0) - 0.5).abs() < 1e-15);
        let (ie, ia) = (s.index(E, 0, 0), s.index(A, 0, 0));
        assert!((rho.get(ie, ia) - C64::new(0.5, 0.0)).norm() < 1e-15);
        let excited: f64 = s
            .basis()
            .filter(|&(_, _, a, b)| a + b > 0)
            .map(|(i, ..)| rho.get(i, i).re)
            .sum();
        assert_eq!(excited, 0.0);
        assert!((rho.trace() - ONE).norm() < 1e-15);
    }

    #[test]
    fn noon_target_phases() {
        let s = make_space(3, 3).unwrap();
        let t2 = noon_target(s, 2).unwrap();
        let r = FRAC_1_SQRT_2;
        assert!((t2.amplitude(G, 2, 0) - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((t2.amplitude(G, 0, 2) - C64::new(r, 0.0)).norm() < 1e-15);
        let t3 = noon_target(s, 3).unwrap();
        assert!((t3.amplitude(G, 3, 0) - C64::new(0.0, -r)).norm() < 1e-15);
        for n in 2..=3 {
            assert!((noon_target(s, n).unwrap().norm() - 1.0).abs() < 1e-15);
        }
        assert!(matches!(
            noon_target(s, 4),
            Err(Error::TargetExceedsCutoff { .. })
        ));
    }

    #[test]
    fn ladder_matches_closed_form_states() {
        let r = FRAC_1_SQRT_2;
        for n in 2..=7 {
            let s = make_space(n + 1, n + 1).unwrap();
            let ladder = ideal_ladder(n, s).unwrap();
            assert_eq!(ladder.len(), 2 * n + 1);
            let mi = C64::new(0.0, -r);
            // after step-1 resonance: −i/√2 (|g,1,0> + |f,0,1>)
            assert!(close(&ladder[0], &ket(s, &[(mi, G, 1, 0), (mi, F, 0, 1)])) < 1e-12);
            if n > 2 {
                // after the step-1 double pulse: −i/√2 (|e,1,0> + |a,0,1>)
                assert!(close(&ladder[1], &ket(s, &[(mi, E, 1, 0), (mi, A, 0, 1)])) < 1e-12);
            }
            let c = minus_i_pow(n - 1) * r;
            // after step N−1
            let idx = 2 * (n - 1) - 2;
            assert!(close(&ladder[idx], &ket(s, &[(c, G, n - 1, 0), (c, F, 0, n - 1)])) < 1e-12);
            // after the step-N retune
            let after_ae = ket(s, &[(c, G, n - 1, 0), (c * C64::new(0.0, -1.0), E, 0, n)]);
            assert!(close(&ladder[idx + 2], &after_ae) < 1e-12);
            // after the step-(N+1) pulse
            let after_eg = ket(s, &[(c, E, n - 1, 0), (c * C64::new(0.0, 1.0), G, 0, n)]);
            assert!(close(&ladder[idx + 3], &after_eg) < 1e-12);
            assert!(close(&ladder[idx + 4], &noon_target(s, n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn ideal_run_is_exact() {
        let cfg = RunConfig::ideal(3, 1.0, 30.0);
        let res = run_protocol(&cfg).unwrap();
        assert!(res.fidelity > 0.9999);
        for cp in &res.checkpoints {
            assert!(
                cp.overlap.unwrap() > 1.0 - 1e-8,
                "{}: {:?}",
                cp.label,
                cp.overlap
            );
        }
        assert!(res.warnings.is_empty());
    }

    #[test]
    fn default_cutoffs_grow_until_the_edge_is_empty() {
        // weak pulses leave a large residual coupling during every pulse
        let mut cfg = RunConfig::imperfect(3, 1.0, 2.0);
        cfg.rates = NoiseRates::none();
        let grown = run_protocol(&cfg).unwrap();
        assert!(grown.nmax.0 > 5, "{:?}", grown.nmax);
        assert!(grown.diagnostics.edge_population < EDGE_TOLERANCE);
        assert!(grown.warnings.is_empty());

        cfg.nmax = Some((5, 5));
        let fixed = run_protocol(&cfg).unwrap();
        assert_eq!(fixed.nmax, (5, 5));
        assert!(fixed.diagnostics.edge_population >= EDGE_TOLERANCE);
        assert!(!fixed.warnings.is_empty());
    }

    #[test]
    fn run_rejects_single_photon() {
        let cfg = RunConfig::ideal(1, 1.0, 30.0);
        assert!(matches!(
            run_protocol(&cfg),
            Err(Error::PhotonNumberTooSmall(1))
        ));
    }

    #[test]
    fn async_schedule_orders_subspaces() {
        let omega = 200.0;
        let faster_one = PhysicalParams {
            g1: 1.2,
            ..PhysicalParams::ideal(1.0, omega)
        };
        let s = build_schedule_async(4, &faster_one).unwrap();
        // subspace I finishes first, then subspace II resonates alone
        let pre: Vec<_> = s.segments[..s.segments.len() - 4]
            .iter()
            .map(|x| x.kind)
            .collect();
        assert!(pre.contains(&SegmentKind::ResonantAF));
        assert!(!pre.contains(&SegmentKind::ResonantEG));
        for w in s.segments.windows(2) {
            assert!((w[1].t_start - w[0].t_end()).abs() < 1e-15);
        }

        let faster_two = PhysicalParams {
            g1: 0.95,
            ..PhysicalParams::ideal(1.0, omega)
        };
        let s = build_schedule_async(4, &faster_two).unwrap();
        let pre: Vec<_> = s.segments[..s.segments.len() - 4]
            .iter()
            .map(|x| x.kind)
            .collect();
        assert!(pre.contains(&SegmentKind::ResonantEG));
        assert!(!pre.contains(&SegmentKind::ResonantAF));

        assert_eq!(
            build_schedule_async(4, &PhysicalParams::ideal(1.0, omega)),
            Err(Error::SymmetricCouplings)
        );
    }

    #[test]
    fn async_run_restores_ideal_fidelity() {
        let mut cfg = RunConfig::ideal(3, 1.0, 100.0);
        cfg.params.g1 = 0.9;
        cfg.schedule = ScheduleMode::Asynchronous;
        let res = run_protocol(&cfg).unwrap();
        assert!(res.fidelity >= 0.999, "{}", res.fidelity);

        cfg.schedule = ScheduleMode::Synchronous;
        let sync = run_protocol(&cfg).unwrap();
        assert!(sync.fidelity < res.fidelity);
    }

    #[test]
    fn pulse_unitary_is_unitary() {
        let s = make_space(2, 2).unwrap();
        let u = pulse_unitary(s, &[Drive::EG, Drive::AF], 0.3);
        let uu = u.matmul(&u.dagger()).unwrap();
        assert!(uu.max_abs_diff(&SparseOperator::identity(s)) < 1e-15);
    }
}
