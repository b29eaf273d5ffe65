// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Hilbert space of a four-level device coupled to two cavity modes,
//! together with the state containers and sparse operators built on top of it.
//!
//! Basis ordering is level-major, then the cavity-1 photon number, then the
//! cavity-2 photon number:
//!
//! ```text
//! index(level, n1, n2) = (level * (nmax1 + 1) + n1) * (nmax2 + 1) + n2
//! ```
//!
//! Output files that store raw amplitudes or matrix elements rely on this
//! ordering.

use std::fmt;

use faer::complex_native::c64;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// The four addressable levels of the coupler device, in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeviceLevel {
    G,
    E,
    F,
    A,
}

impl DeviceLevel {
    pub const ALL: [DeviceLevel; 4] = [
        DeviceLevel::G,
        DeviceLevel::E,
        DeviceLevel::F,
        DeviceLevel::A,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for DeviceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeviceLevel::G => "g",
            DeviceLevel::E => "e",
            DeviceLevel::F => "f",
            DeviceLevel::A => "a",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cavity {
    One,
    Two,
}

/// Device ⊗ cavity 1 ⊗ cavity 2, each cavity truncated at `nmax` photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeSpace {
    nmax1: usize,
    nmax2: usize,
}

impl CompositeSpace {
    pub fn new(nmax1: usize, nmax2: usize) -> Result<Self> {
        for n in [nmax1, nmax2] {
            if n < 1 {
                return Err(Error::InvalidCutoff(n));
            }
        }
        Ok(Self { nmax1, nmax2 })
    }

    pub fn nmax1(&self) -> usize {
        self.nmax1
    }

    pub fn nmax2(&self) -> usize {
        self.nmax2
    }

    pub fn nmax(&self, cavity: Cavity) -> usize {
        match cavity {
            Cavity::One => self.nmax1,
            Cavity::Two => self.nmax2,
        }
    }

    pub fn dim(&self) -> usize {
        4 * (self.nmax1 + 1) * (self.nmax2 + 1)
    }

    /// Basis index of `|level, n1, n2>`.
    pub fn encode(&self, level: DeviceLevel, n1: usize, n2: usize) -> Result<usize> {
        if n1 > self.nmax1 || n2 > self.nmax2 {
            return Err(Error::OutOfRange {
                level,
                n1,
                n2,
                nmax1: self.nmax1,
                nmax2: self.nmax2,
            });
        }
        Ok(self.index(level, n1, n2))
    }

    #[inline]
    pub(crate) fn index(&self, level: DeviceLevel, n1: usize, n2: usize) -> usize {
        (level.index() * (self.nmax1 + 1) + n1) * (self.nmax2 + 1) + n2
    }

    /// Inverse of [`encode`](Self::encode); `None` outside `[0, dim)`.
    pub fn decode(&self, index: usize) -> Option<(DeviceLevel, usize, usize)> {
        if index >= self.dim() {
            return None;
        }
        let n2 = index % (self.nmax2 + 1);
        let rest = index / (self.nmax2 + 1);
        let n1 = rest % (self.nmax1 + 1);
        let level = DeviceLevel::from_index(rest / (self.nmax1 + 1))?;
        Some((level, n1, n2))
    }

    /// Iterates `(index, level, n1, n2)` in basis order.
    pub fn basis(&self) -> impl Iterator<Item = (usize, DeviceLevel, usize, usize)> + '_ {
        (0..self.dim()).map(move |i| {
            let (l, n1, n2) = self.decode(i).expect("index below dim");
            (i, l, n1, n2)
        })
    }

    pub(crate) fn ensure_same(&self, other: &CompositeSpace) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

pub fn make_space(nmax1: usize, nmax2: usize) -> Result<CompositeSpace> {
    CompositeSpace::new(nmax1, nmax2)
}

/// A pure state over a [`CompositeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: CompositeSpace,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zeros(space: CompositeSpace) -> Self {
        Self {
            space,
            amplitudes: vec![ZERO; space.dim()],
        }
    }

    pub fn from_amplitudes(space: CompositeSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: CompositeSpace, level: DeviceLevel, n1: usize, n2: usize) -> Result<Self> {
        let idx = space.encode(level, n1, n2)?;
        let mut psi = Self::zeros(space);
        psi.amplitudes[idx] = ONE;
        Ok(psi)
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    /// Amplitude of `|level, n1, n2>`; zero outside the truncation.
    pub fn amplitude(&self, level: DeviceLevel, n1: usize, n2: usize) -> C64 {
        self.space
            .encode(level, n1, n2)
            .map(|i| self.amplitudes[i])
            .unwrap_or(ZERO)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(mut self, c: C64) -> Self {
        self.amplitudes.iter_mut().for_each(|a| *a *= c);
        self
    }

    /// `self + c * other`.
    pub fn add_scaled(mut self, c: C64, other: &StateVector) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
        Ok(self)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

pub fn basis_state(
    space: CompositeSpace,
    level: DeviceLevel,
    n1: usize,
    n2: usize,
) -> Result<StateVector> {
    StateVector::basis(space, level, n1, n2)
}

/// Dense density matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: CompositeSpace,
    elements: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(space: CompositeSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            elements: vec![ZERO; d * d],
        }
    }

    pub fn from_elements(space: CompositeSpace, elements: Vec<C64>) -> Result<Self> {
        let d = space.dim();
        if elements.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: elements.len(),
            });
        }
        Ok(Self { space, elements })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let space = psi.space();
        let d = space.dim();
        let a = psi.amplitudes();
        let mut elements = vec![ZERO; d * d];
        for (i, ai) in a.iter().enumerate() {
            if *ai == ZERO {
                continue;
            }
            for (j, aj) in a.iter().enumerate() {
                elements[i * d + j] = ai * aj.conj();
            }
        }
        Self { space, elements }
    }

    pub fn maximally_mixed(space: CompositeSpace) -> Self {
        let d = space.dim();
        let mut rho = Self::zeros(space);
        for i in 0..d {
            rho.elements[i * d + i] = C64::new(1.0 / d as f64, 0.0);
        }
        rho
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn elements(&self) -> &[C64] {
        &self.elements
    }

    pub fn elements_mut(&mut self) -> &mut [C64] {
        &mut self.elements
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.elements[row * self.dim() + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        let d = self.dim();
        self.elements[row * d + col] = value;
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.elements[i * d + i]).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                let r = (self.elements[i * d + j] - self.elements[j * d + i].conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Population of a single basis state.
    pub fn population(&self, level: DeviceLevel, n1: usize, n2: usize) -> f64 {
        match self.space.encode(level, n1, n2) {
            Ok(i) => self.get(i, i).re,
            Err(_) => 0.0,
        }
    }

    /// `<psi|rho|psi>`.
    pub fn overlap(&self, psi: &StateVector) -> Result<C64> {
        self.space.ensure_same(&psi.space())?;
        let d = self.dim();
        let a = psi.amplitudes();
        let mut acc = ZERO;
        for (i, ai) in a.iter().enumerate() {
            if *ai == ZERO {
                continue;
            }
            let row = &self.elements[i * d..(i + 1) * d];
            let mut inner = ZERO;
            for (rij, aj) in row.iter().zip(a) {
                inner += rij * aj;
            }
            acc += ai.conj() * inner;
        }
        Ok(acc)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let m = faer::Mat::<c64>::from_fn(d, d, |i, j| {
            let x = 0.5 * (self.elements[i * d + j] + self.elements[j * d + i].conj());
            c64::new(x.re, x.im)
        });
        let mut ev = m.selfadjoint_eigenvalues(faer::Side::Lower);
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Partial trace over both cavities, as a 4×4 matrix indexed by [`DeviceLevel`].
    pub fn reduced_device(&self) -> [[C64; 4]; 4] {
        let d = self.dim();
        let block = d / 4;
        let mut out = [[ZERO; 4]; 4];
        for (x, row) in out.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                *cell = (0..block)
                    .map(|k| self.elements[(x * block + k) * d + (y * block + k)])
                    .sum();
            }
        }
        out
    }

    /// Total population on states with either cavity at its cutoff.
    pub fn edge_population(&self) -> f64 {
        let (m1, m2) = (self.space.nmax1(), self.space.nmax2());
        self.space
            .basis()
            .filter(|&(_, _, n1, n2)| n1 == m1 || n2 == m2)
            .map(|(i, ..)| self.get(i, i).re)
            .sum()
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.elements.iter_mut().for_each(|x| *x *= c);
        self
    }

    /// `self + c * other`.
    pub fn add_scaled(mut self, c: f64, other: &DensityMatrix) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        for (a, b) in self.elements.iter_mut().zip(&other.elements) {
            *a += b * c;
        }
        Ok(self)
    }

    /// Largest element-wise distance to another matrix.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Sparse complex operator in compressed-row form.
///
/// Rows hold strictly increasing column indices with no duplicates; exact
/// zeros are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    space: CompositeSpace,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets<I>(space: CompositeSpace, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let d = space.dim();
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            if r >= d || c >= d {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    dim: d,
                });
            }
        }
        t.sort_by_key(|&(r, c, _)| (r, c));

        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);

        let mut row_ptr = vec![0usize; d + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..d {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = merged.iter().map(|e| e.1).collect();
        let vals = merged.iter().map(|e| e.2).collect();
        Ok(Self {
            space,
            row_ptr,
            cols,
            vals,
        })
    }

    fn from_valid_triplets<I>(space: CompositeSpace, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        Self::from_triplets(space, triplets).expect("indices generated inside the space")
    }

    pub fn zero(space: CompositeSpace) -> Self {
        Self {
            space,
            row_ptr: vec![0; space.dim() + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(space: CompositeSpace) -> Self {
        Self::from_valid_triplets(space, (0..space.dim()).map(|i| (i, i, ONE)))
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            let (c, v) = self.row(r);
            c.iter().zip(v).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        if row >= self.dim() {
            return ZERO;
        }
        let (c, v) = self.row(row);
        match c.binary_search(&col) {
            Ok(k) => v[k],
            Err(_) => ZERO,
        }
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.space.ensure_same(&other.space)?;
        Ok(Self::from_valid_triplets(
            self.space,
            self.entries().chain(other.entries()),
        ))
    }

    pub fn scale(&self, c: C64) -> SparseOperator {
        Self::from_valid_triplets(self.space, self.entries().map(|(r, k, v)| (r, k, v * c)))
    }

    /// `self · other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.space.ensure_same(&other.space)?;
        let mut t = Vec::new();
        for (r, k, v) in self.entries() {
            let (c2, v2) = other.row(k);
            for (&c, &w) in c2.iter().zip(v2) {
                t.push((r, c, v * w));
            }
        }
        Ok(Self::from_valid_triplets(self.space, t))
    }

    pub fn dagger(&self) -> SparseOperator {
        Self::from_valid_triplets(self.space, self.entries().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add(&ba.scale(-ONE))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.space.ensure_same(&psi.space())?;
        let mut out = StateVector::zeros(self.space);
        self.apply_into(psi.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// `out = self · x`.
    pub(crate) fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *o = c.iter().zip(v).map(|(&k, w)| w * x[k]).sum();
        }
    }

    /// `Tr(self · rho)`.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<C64> {
        self.space.ensure_same(&rho.space())?;
        Ok(self.entries().map(|(i, j, v)| v * rho.get(j, i)).sum())
    }

    /// Largest `|X_ij - conj(X_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute row sum; bounds the spectral radius.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let d = self.dim();
        let mut m = vec![ZERO; d * d];
        for (r, c, v) in self.entries() {
            m[r * d + c] = v;
        }
        m
    }

    /// Largest element-wise distance to another operator.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        let neg = other.scale(-ONE);
        match self.add(&neg) {
            Ok(diff) => diff.vals.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Photon annihilation operator of one cavity: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(space: CompositeSpace, cavity: Cavity) -> SparseOperator {
    let t = space.basis().filter_map(|(i, level, n1, n2)| {
        let (m1, m2, n) = match cavity {
            Cavity::One if n1 > 0 => (n1 - 1, n2, n1),
            Cavity::Two if n2 > 0 => (n1, n2 - 1, n2),
            _ => return None,
        };
        let j = space.index(level, m1, m2);
        Some((j, i, C64::new((n as f64).sqrt(), 0.0)))
    });
    SparseOperator::from_valid_triplets(space, t)
}

pub fn creation(space: CompositeSpace, cavity: Cavity) -> SparseOperator {
    annihilation(space, cavity).dagger()
}

/// `a†a` of one cavity.
pub fn number(space: CompositeSpace, cavity: Cavity) -> SparseOperator {
    let t = space.basis().map(|(i, _, n1, n2)| {
        let n = match cavity {
            Cavity::One => n1,
            Cavity::Two => n2,
        };
        (i, i, C64::new(n as f64, 0.0))
    });
    SparseOperator::from_valid_triplets(space, t)
}

/// `|to><from| ⊗ 1 ⊗ 1`.
pub fn transition(
    space: CompositeSpace,
    to: DeviceLevel,
    from: DeviceLevel,
) -> Result<SparseOperator> {
    if to == from {
        return Err(Error::SameLevel(to));
    }
    Ok(device_outer(space, to, from))
}

/// `|level><level| ⊗ 1 ⊗ 1`.
pub fn projector(space: CompositeSpace, level: DeviceLevel) -> SparseOperator {
    device_outer(space, level, level)
}

fn device_outer(space: CompositeSpace, to: DeviceLevel, from: DeviceLevel) -> SparseOperator {
    let t = space
        .basis()
        .filter(|&(_, l, _, _)| l == from)
        .map(|(i, _, n1, n2)| (space.index(to, n1, n2), i, ONE));
    SparseOperator::from_valid_triplets(space, t)
}
