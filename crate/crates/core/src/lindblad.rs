// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Master-equation dynamics.
//!
//! ```text
//! dρ/dt = −i[H(t), ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})
//! ```
//!
//! The generator is never materialised as a superoperator. Instead the
//! Hamiltonian and the anticommutator terms are folded into a non-Hermitian
//! effective operator `K = H − (i/2) Σ γ L†L`, so that for Hermitian `ρ`
//!
//! ```text
//! dρ/dt = A + A† + Σ γ L ρ L†,    A = −i K ρ
//! ```
//!
//! which needs one sparse × dense product per evaluation plus the jump terms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{
    annihilation, projector, transition, Cavity, CompositeSpace, DensityMatrix, DeviceLevel,
    SparseOperator, StateVector, C64, ZERO,
};
use crate::hamiltonians::{
    segment_generator, CrosstalkMode, PhysicalParams, SegmentKind, TimeDependentHamiltonian,
};
use crate::units::lifetime_us_to_rate;

/// Trace drift tolerated over one integrated segment.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
/// Hermiticity residual tolerated after one integrated segment.
pub const HERMITICITY_LIMIT: f64 = 1e-8;

/// Decay and dephasing rates in 1/s. A zero rate switches its channel off.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseRates {
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma_ae: f64,
    pub gamma_af: f64,
    pub gamma_ag: f64,
    pub gamma_ef: f64,
    pub gamma_eg: f64,
    pub gamma_fg: f64,
    pub gphi_a: f64,
    pub gphi_e: f64,
    pub gphi_f: f64,
}

impl NoiseRates {
    pub fn none() -> Self {
        Self::default()
    }

    /// Lifetimes of a typical flux coupler and high-Q resonators:
    /// dephasing 5 / 1.5 / 0.5 µs for f / e / a, relaxation 10 µs (f→g),
    /// 3 µs (e→g, e→f), 1.5 µs (a→e, a→f, a→g), cavities 20 µs.
    pub fn default_device() -> Self {
        let r = lifetime_us_to_rate;
        Self {
            kappa1: r(20.0),
            kappa2: r(20.0),
            gamma_ae: r(1.5),
            gamma_af: r(1.5),
            gamma_ag: r(1.5),
            gamma_ef: r(3.0),
            gamma_eg: r(3.0),
            gamma_fg: r(10.0),
            gphi_a: r(0.5),
            gphi_e: r(1.5),
            gphi_f: r(5.0),
        }
    }

    pub fn kappa_only(kappa1: f64) -> Self {
        Self {
            kappa1,
            ..Self::none()
        }
    }

    fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma_ae", self.gamma_ae),
            ("gamma_af", self.gamma_af),
            ("gamma_ag", self.gamma_ag),
            ("gamma_ef", self.gamma_ef),
            ("gamma_eg", self.gamma_eg),
            ("gamma_fg", self.gamma_fg),
            ("gphi_a", self.gphi_a),
            ("gphi_e", self.gphi_e),
            ("gphi_f", self.gphi_f),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("rate must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.named().iter().all(|&(_, v)| v == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub label: &'static str,
    pub op: SparseOperator,
    pub rate: f64,
}

/// Collapse operators paired with their rates.
#[derive(Debug, Clone)]
pub struct CollapseSet {
    space: CompositeSpace,
    channels: Vec<Channel>,
}

impl CollapseSet {
    pub fn empty(space: CompositeSpace) -> Self {
        Self {
            space,
            channels: Vec::new(),
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }
}

type LazyChannel<'a> = (&'static str, f64, Box<dyn Fn() -> SparseOperator + 'a>);

/// Builds the channel list in the order
/// `a1, a2, σ⁻_ae, σ⁻_af, σ⁻_ag, σ⁻_ef, σ⁻_eg, σ⁻_fg, σ_aa, σ_ee, σ_ff`,
/// skipping channels whose rate is zero.
pub fn collapse_operators(rates: &NoiseRates, space: CompositeSpace) -> CollapseSet {
    use DeviceLevel::*;
    let lower = |to, from| transition(space, to, from).expect("distinct levels");
    let candidates: [LazyChannel<'_>; 11] = [
        (
            "kappa1",
            rates.kappa1,
            Box::new(|| annihilation(space, Cavity::One)),
        ),
        (
            "kappa2",
            rates.kappa2,
            Box::new(|| annihilation(space, Cavity::Two)),
        ),
        ("gamma_ae", rates.gamma_ae, Box::new(move || lower(E, A))),
        ("gamma_af", rates.gamma_af, Box::new(move || lower(F, A))),
        ("gamma_ag", rates.gamma_ag, Box::new(move || lower(G, A))),
        ("gamma_ef", rates.gamma_ef, Box::new(move || lower(F, E))),
        ("gamma_eg", rates.gamma_eg, Box::new(move || lower(G, E))),
        ("gamma_fg", rates.gamma_fg, Box::new(move || lower(G, F))),
        ("gphi_a", rates.gphi_a, Box::new(|| projector(space, A))),
        ("gphi_e", rates.gphi_e, Box::new(|| projector(space, E))),
        ("gphi_f", rates.gphi_f, Box::new(|| projector(space, F))),
    ];
    let channels = candidates
        .into_iter()
        .filter(|(_, rate, _)| *rate > 0.0)
        .map(|(label, rate, build)| Channel {
            label,
            op: build(),
            rate,
        })
        .collect();
    CollapseSet { space, channels }
}

/// Non-zero entries of a jump operator, with `sqrt(rate)` folded in.
/// A scaled collapse operator `√γ L`, stored as row-sorted triplets.
#[derive(Debug, Clone)]
struct Jump {
    entries: Vec<(usize, usize, C64)>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    conj_vals: Vec<C64>,
    /// End of the diagonal run (row and column both stepping by one) that
    /// contains each entry.
    run_end: Vec<usize>,
}

impl Jump {
    fn new(entries: Vec<(usize, usize, C64)>) -> Self {
        let n = entries.len();
        let rows: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let cols: Vec<usize> = entries.iter().map(|e| e.1).collect();
        let vals: Vec<C64> = entries.iter().map(|e| e.2).collect();
        let conj_vals = vals.iter().map(|v| v.conj()).collect();
        let mut run_end = vec![n; n];
        for p in (0..n.saturating_sub(1)).rev() {
            run_end[p] = if rows[p + 1] == rows[p] + 1 && cols[p + 1] == cols[p] + 1 {
                run_end[p + 1]
            } else {
                p + 1
            };
        }
        Self {
            entries,
            rows,
            cols,
            vals,
            conj_vals,
            run_end,
        }
    }
}

/// A compiled master-equation generator for one segment.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: CompositeSpace,
    effective: SparseOperator,
    rotating: Vec<(SparseOperator, f64)>,
    jumps: Vec<Jump>,
    frequency_bound: f64,
}

impl Liouvillian {
    pub fn new(h: &TimeDependentHamiltonian, collapses: &CollapseSet) -> Result<Self> {
        let space = h.space();
        space.ensure_same(&collapses.space())?;

        let mut anti = SparseOperator::zero(space);
        let mut jumps = Vec::with_capacity(collapses.len());
        for ch in collapses.channels() {
            space.ensure_same(&ch.op.space())?;
            let ldl = ch.op.dagger().matmul(&ch.op)?;
            anti = anti.add(&ldl.scale(C64::new(ch.rate, 0.0)))?;
            let s = ch.rate.sqrt();
            jumps.push(Jump::new(
                ch.op.entries().map(|(r, c, v)| (r, c, v * s)).collect(),
            ));
        }
        let effective = h.static_part.add(&anti.scale(C64::new(0.0, -0.5)))?;
        // Dissipative rates bound the non-Hermitian part as well.
        let frequency_bound = h.frequency_bound() + anti.max_row_sum();
        Ok(Self {
            space,
            effective,
            rotating: h.rotating.clone(),
            jumps,
            frequency_bound,
        })
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    /// Upper bound on the fastest rate (rad/s) in the generator.
    pub fn frequency_bound(&self) -> f64 {
        self.frequency_bound
    }

    /// `out = −i K(t) rho`, row by row.
    fn effective_product(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.space.dim();
        let coeffs: Vec<C64> = self
            .rotating
            .iter()
            .map(|(_, w)| C64::from_polar(1.0, w * t) * C64::new(0.0, -1.0))
            .collect();
        let minus_i = C64::new(0.0, -1.0);
        for (i, out_row) in out.chunks_exact_mut(d).enumerate() {
            out_row.fill(ZERO);
            let (cols, vals) = self.effective.row(i);
            for (&k, &v) in cols.iter().zip(vals) {
                axpy(v * minus_i, &rho[k * d..(k + 1) * d], out_row);
            }
            for ((x, _), &c) in self.rotating.iter().zip(&coeffs) {
                let (cols, vals) = x.row(i);
                for (&k, &v) in cols.iter().zip(vals) {
                    axpy(v * c, &rho[k * d..(k + 1) * d], out_row);
                }
            }
        }
    }

    /// `out += Σ J rho J†`.
    fn add_jumps(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.space.dim();
        for jump in &self.jumps {
            for &(i, k, v1) in &jump.entries {
                let rho_row = &rho[k * d..(k + 1) * d];
                let out_row = &mut out[i * d..(i + 1) * d];
                for &(j, l, v2) in &jump.entries {
                    out_row[j] += v1 * v2.conj() * rho_row[l];
                }
            }
        }
    }

    /// Adds the upper triangle of `Σ J rho J†` to `out`, with the diagonal
    /// halved, so that a later `X + X†` yields the full term.
    fn add_jumps_upper_half(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.space.dim();
        for jump in &self.jumps {
            let n = jump.rows.len();
            let mut p = 0;
            while p < n {
                let i = jump.rows[p];
                let mut r = p;
                while r < n && jump.rows[r] == i {
                    r += 1;
                }
                let out_row = &mut out[i * d..(i + 1) * d];
                for q in p..r {
                    let (k, v) = (jump.cols[q], jump.vals[q]);
                    let rho_row = &rho[k * d..(k + 1) * d];
                    for s in p..r {
                        out_row[jump.rows[s]] +=
                            v * jump.conj_vals[s] * rho_row[jump.cols[s]] * 0.5;
                    }
                    let mut s = r;
                    while s < n {
                        let e = jump.run_end[s];
                        let (j0, l0, len) = (jump.rows[s], jump.cols[s], e - s);
                        let dst = &mut out_row[j0..j0 + len];
                        let src = &rho_row[l0..l0 + len];
                        for ((o, x), w) in dst.iter_mut().zip(src).zip(&jump.conj_vals[s..e]) {
                            *o += v * w * x;
                        }
                        s = e;
                    }
                }
                p = r;
            }
        }
    }

    /// `dρ/dt` for Hermitian `rho`; the result is exactly Hermitian.
    pub fn apply_hermitian(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.space.dim();
        self.effective_product(t, rho, out);
        self.add_jumps_upper_half(rho, out);
        const TILE: usize = 32;
        for bi in (0..d).step_by(TILE) {
            for bj in (bi..d).step_by(TILE) {
                for i in bi..(bi + TILE).min(d) {
                    for j in bj.max(i)..(bj + TILE).min(d) {
                        if i == j {
                            let ii = i * d + i;
                            out[ii] = C64::new(2.0 * out[ii].re, 0.0);
                        } else {
                            let (a, b) = (out[i * d + j], out[j * d + i]);
                            out[i * d + j] = a + b.conj();
                            out[j * d + i] = b + a.conj();
                        }
                    }
                }
            }
        }
    }

    /// `dρ/dt` without assuming `rho` is Hermitian.
    pub fn apply_general(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.space.dim();
        self.effective_product(t, rho, out);
        // + i rho K(t)†
        let plus_i = C64::new(0.0, 1.0);
        let coeffs: Vec<C64> = self
            .rotating
            .iter()
            .map(|(_, w)| C64::from_polar(1.0, w * t))
            .collect();
        for i in 0..d {
            let rho_row = &rho[i * d..(i + 1) * d];
            for j in 0..d {
                let mut acc = ZERO;
                let (cols, vals) = self.effective.row(j);
                for (&k, v) in cols.iter().zip(vals) {
                    acc += rho_row[k] * v.conj();
                }
                for ((x, _), c) in self.rotating.iter().zip(&coeffs) {
                    let (cols, vals) = x.row(j);
                    for (&k, v) in cols.iter().zip(vals) {
                        acc += rho_row[k] * (v * c).conj();
                    }
                }
                out[i * d + j] += plus_i * acc;
            }
        }
        self.add_jumps(rho, out);
    }
}

#[inline]
fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `dρ/dt` for a time-independent Hamiltonian.
pub fn liouvillian_rhs(
    rho: &DensityMatrix,
    h: &SparseOperator,
    collapses: &CollapseSet,
) -> Result<DensityMatrix> {
    rho.space().ensure_same(&h.space())?;
    let l = Liouvillian::new(&TimeDependentHamiltonian::constant(h.clone()), collapses)?;
    let mut out = DensityMatrix::zeros(rho.space());
    l.apply_general(0.0, rho.elements(), out.elements_mut());
    Ok(out)
}

/// Fixed-step size rule: at least `steps_per_period` steps per period of the
/// fastest frequency in the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub steps_per_period: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            steps_per_period: 50.0,
        }
    }
}

impl StepPolicy {
    /// Fine enough for `1 − overlap < 1e-8` on noise-free runs.
    pub const FINE: StepPolicy = StepPolicy {
        steps_per_period: 400.0,
    };

    pub fn max_step(&self, l: &Liouvillian) -> f64 {
        let w = l.frequency_bound();
        if w > 0.0 {
            2.0 * PI / (self.steps_per_period * w)
        } else {
            f64::INFINITY
        }
    }
}

/// Reusable buffers for the classical Runge–Kutta scheme.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4Workspace {
    pub fn new(dim: usize) -> Self {
        let n = dim * dim;
        Self {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
        }
    }

    fn fits(&self, dim: usize) -> bool {
        self.tmp.len() == dim * dim
    }
}

/// Number of equal steps covering `duration` with steps no longer than `max_dt`.
pub fn step_count(duration: f64, max_dt: f64) -> usize {
    if duration <= 0.0 {
        return 0;
    }
    if !max_dt.is_finite() {
        return 1;
    }
    ((duration / max_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Integrates `rho` in place from `t_start` over `duration`.
pub fn integrate(
    rho: &mut DensityMatrix,
    l: &Liouvillian,
    t_start: f64,
    duration: f64,
    max_dt: f64,
    label: &str,
    ws: &mut Rk4Workspace,
) -> Result<()> {
    let space = rho.space();
    space.ensure_same(&l.space())?;
    let d = space.dim();
    if !ws.fits(d) {
        *ws = Rk4Workspace::new(d);
    }
    let steps = step_count(duration, max_dt);
    if steps == 0 {
        return Ok(());
    }
    let h = duration / steps as f64;
    let trace0 = rho.trace().re;

    let Rk4Workspace { k, tmp } = ws;
    let [k1, k2, k3, k4] = k;
    let y = rho.elements_mut();
    for step in 0..steps {
        let t = t_start + step as f64 * h;
        l.apply_hermitian(t, y, k1);
        combine(tmp, y, 0.5 * h, k1);
        l.apply_hermitian(t + 0.5 * h, tmp, k2);
        combine(tmp, y, 0.5 * h, k2);
        l.apply_hermitian(t + 0.5 * h, tmp, k3);
        combine(tmp, y, h, k3);
        l.apply_hermitian(t + h, tmp, k4);
        let c = h / 6.0;
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
        }
    }

    check_drift(rho, trace0, label)
}

fn combine(out: &mut [C64], y: &[C64], a: f64, k: &[C64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * a;
    }
}

fn check_drift(rho: &DensityMatrix, trace0: f64, label: &str) -> Result<()> {
    let tr = rho.trace();
    let drift = (tr.re - trace0).abs().max(tr.im.abs());
    if !drift.is_finite() || drift > TRACE_DRIFT_LIMIT {
        return Err(Error::IntegrationDrift {
            segment: label.to_string(),
            quantity: "trace drift",
            value: drift,
            limit: TRACE_DRIFT_LIMIT,
        });
    }
    let herm = rho.hermitian_residual();
    if !herm.is_finite() || herm > HERMITICITY_LIMIT {
        return Err(Error::IntegrationDrift {
            segment: label.to_string(),
            quantity: "hermiticity residual",
            value: herm,
            limit: HERMITICITY_LIMIT,
        });
    }
    Ok(())
}

/// Evolves `rho0` through one segment of the given kind, with steps of at
/// most `dt`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_segment(
    rho0: &DensityMatrix,
    kind: SegmentKind,
    duration: f64,
    t_start: f64,
    params: &PhysicalParams,
    rates: &NoiseRates,
    dt: f64,
    mode: CrosstalkMode,
) -> Result<DensityMatrix> {
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::InvalidParameter {
            name: "duration",
            reason: format!("must be finite and non-negative, got {duration}"),
        });
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let space = rho0.space();
    let h = segment_generator(kind, params, space, mode);
    let l = Liouvillian::new(&h, &collapse_operators(rates, space))?;
    let mut rho = rho0.clone();
    let mut ws = Rk4Workspace::new(space.dim());
    integrate(&mut rho, &l, t_start, duration, dt, kind.name(), &mut ws)?;
    Ok(rho)
}

/// Closed-system evolution `ψ' = −iHψ` with fixed RK4 steps of at most `dt`.
pub fn evolve_unitary(
    psi0: &StateVector,
    h: &SparseOperator,
    duration: f64,
    dt: f64,
) -> Result<StateVector> {
    psi0.space().ensure_same(&h.space())?;
    if dt.is_nan() || dt <= 0.0 || duration.is_nan() || duration < 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("need dt > 0 and duration >= 0, got dt = {dt}, duration = {duration}"),
        });
    }
    let steps = step_count(duration, dt);
    if steps == 0 {
        return Ok(psi0.clone());
    }
    let step = duration / steps as f64;
    let d = psi0.space().dim();
    let mut y = psi0.amplitudes().to_vec();
    let norm0: f64 = y.iter().map(|a| a.norm_sqr()).sum();
    let mut k: [Vec<C64>; 4] = std::array::from_fn(|_| vec![ZERO; d]);
    let mut tmp = vec![ZERO; d];
    let minus_i = C64::new(0.0, -1.0);
    let f = |x: &[C64], out: &mut [C64]| {
        h.apply_into(x, out);
        out.iter_mut().for_each(|o| *o *= minus_i);
    };
    for _ in 0..steps {
        let [k1, k2, k3, k4] = &mut k;
        f(&y, k1);
        combine(&mut tmp, &y, 0.5 * step, k1);
        f(&tmp, k2);
        combine(&mut tmp, &y, 0.5 * step, k2);
        f(&tmp, k3);
        combine(&mut tmp, &y, step, k3);
        f(&tmp, k4);
        let c = step / 6.0;
        for i in 0..d {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
        }
    }
    let norm: f64 = y.iter().map(|a| a.norm_sqr()).sum();
    let drift = (norm - norm0).abs();
    if !drift.is_finite() || drift > TRACE_DRIFT_LIMIT {
        return Err(Error::IntegrationDrift {
            segment: "unitary".into(),
            quantity: "norm drift",
            value: drift,
            limit: TRACE_DRIFT_LIMIT,
        });
    }
    StateVector::from_amplitudes(psi0.space(), y)
}
