// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Fidelity, state diagnostics, parameter sweeps and coupling optimisation.

use std::cmp::Ordering;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, StateVector};
use crate::protocol::{run_protocol, RunConfig};
use crate::units::{angular_to_mhz, mhz_to_angular};

/// Roundoff allowance for `<ψ|ρ|ψ>` below zero and for its imaginary part.
pub const OVERLAP_ROUNDOFF: f64 = 1e-10;

/// `F = sqrt(<ψ|ρ|ψ>)`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    let o = rho.overlap(target)?;
    if o.im.abs() > OVERLAP_ROUNDOFF || o.re < -OVERLAP_ROUNDOFF || !o.re.is_finite() {
        return Err(Error::InvalidOverlap { re: o.re, im: o.im });
    }
    Ok(o.re.clamp(0.0, 1.0).sqrt())
}

/// Physicality checks on a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `|Tr ρ − 1|`.
    pub trace_drift: f64,
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
    /// Population with either cavity at its cutoff.
    pub edge_population: f64,
    /// `Tr ρ_dev²` of the reduced device state.
    pub device_purity: f64,
}

pub fn diagnostics(rho: &DensityMatrix) -> Diagnostics {
    let dev = rho.reduced_device();
    let mut purity = 0.0;
    for (i, row) in dev.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            purity += (x * dev[j][i]).re;
        }
    }
    Diagnostics {
        trace_drift: (rho.trace() - 1.0).norm(),
        hermitian_residual: rho.hermitian_residual(),
        min_eigenvalue: rho.min_eigenvalue(),
        edge_population: rho.edge_population(),
        device_purity: purity,
    }
}

/// A configuration field that a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Pulse Rabi frequency Ω/2π in MHz.
    OmegaMhz,
    /// Reference coupling g/2π in MHz; `g1, g2, g', g12` keep their ratios to g.
    GMhz,
    /// Target photon number.
    N,
    /// `g12 / g`.
    G12Ratio,
    /// `g1 / g`.
    G1Ratio,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::OmegaMhz => "omega_mhz",
            SweepParameter::GMhz => "g_mhz",
            SweepParameter::N => "n",
            SweepParameter::G12Ratio => "g12_ratio",
            SweepParameter::G1Ratio => "g1_ratio",
        }
    }

    pub fn apply(self, config: &mut RunConfig, value: f64) -> Result<()> {
        let p = &mut config.params;
        match self {
            SweepParameter::OmegaMhz => p.omega_rabi = mhz_to_angular(value),
            SweepParameter::GMhz => *p = p.with_reference_g(mhz_to_angular(value)),
            SweepParameter::G12Ratio => p.g12 = value * p.g,
            SweepParameter::G1Ratio => p.g1 = value * p.g,
            SweepParameter::N => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::InvalidSweep(format!(
                        "photon number must be an integer, got {value}"
                    )));
                }
                config.n = value as usize;
                // keep the default cutoff tracking N
                config.nmax = None;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub template: RunConfig,
    pub axes: Vec<SweepAxis>,
    /// Candidate g/2π values (MHz) to maximise over at every grid point.
    pub optimize_g_mhz: Option<Vec<f64>>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSweep(format!(
                "need one or two axes, got {}",
                self.axes.len()
            )));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::InvalidSweep(format!(
                    "axis `{}` has no values",
                    axis.parameter.column()
                )));
            }
            if axis
                .values
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
            {
                return Err(Error::InvalidSweep(format!(
                    "axis `{}` must be strictly increasing",
                    axis.parameter.column()
                )));
            }
        }
        if self.axes.len() == 2 && self.axes[0].parameter == self.axes[1].parameter {
            return Err(Error::InvalidSweep(
                "both axes vary the same parameter".into(),
            ));
        }
        if let Some(c) = &self.optimize_g_mhz {
            if c.is_empty() {
                return Err(Error::EmptyCandidates);
            }
            if self
                .axes
                .iter()
                .any(|a| a.parameter == SweepParameter::GMhz)
            {
                return Err(Error::InvalidSweep(
                    "cannot both sweep and optimise g".into(),
                ));
            }
        }
        Ok(())
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn config_at(&self, point: &[f64]) -> Result<RunConfig> {
        let mut cfg = self.template.clone();
        // N first, so that ratio-based parameters see the final template.
        let mut order: Vec<usize> = (0..self.axes.len()).collect();
        order.sort_by_key(|&i| self.axes[i].parameter != SweepParameter::N);
        for i in order {
            self.axes[i].parameter.apply(&mut cfg, point[i])?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    /// `NaN` when the point failed.
    pub fidelity: f64,
    pub g_best_mhz: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn evaluate_point(spec: &SweepSpec, point: &[f64]) -> SweepRow {
    let started = Instant::now();
    let outcome = spec
        .config_at(point)
        .and_then(|cfg| match &spec.optimize_g_mhz {
            None => run_protocol(&cfg).map(|r| (r.fidelity, None, r.diagnostics)),
            Some(candidates) => {
                let g: Vec<f64> = candidates.iter().map(|&x| mhz_to_angular(x)).collect();
                let best = optimize_g(&cfg, &g)?;
                Ok((
                    best.fidelity,
                    Some(angular_to_mhz(best.g)),
                    best.diagnostics,
                ))
            }
        });
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((fidelity, g_best_mhz, diag)) => SweepRow {
            axis_values: point.to_vec(),
            fidelity,
            g_best_mhz,
            diagnostics: Some(diag),
            wall_ms,
            error: None,
        },
        Err(e) => SweepRow {
            axis_values: point.to_vec(),
            fidelity: f64::NAN,
            g_best_mhz: None,
            diagnostics: None,
            wall_ms,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every grid point not already present in `done`.
///
/// Points run in parallel on the current rayon pool; `on_row` sees each fresh
/// row as it completes. Failures are recorded per row. The returned rows are
/// in grid order.
pub fn sweep<F>(spec: &SweepSpec, done: &[SweepRow], on_row: F) -> Result<SweepResult>
where
    F: Fn(&SweepRow) + Sync,
{
    spec.validate()?;
    let points = spec.points();
    let find_done = |p: &[f64]| done.iter().find(|r| r.axis_values == p).cloned();
    let pending: Vec<&Vec<f64>> = points.iter().filter(|p| find_done(p).is_none()).collect();

    let fresh: Vec<SweepRow> = pending
        .par_iter()
        .map(|p| {
            let row = evaluate_point(spec, p);
            on_row(&row);
            row
        })
        .collect();

    let rows = points
        .iter()
        .map(|p| {
            find_done(p)
                .or_else(|| fresh.iter().find(|r| &r.axis_values == p).cloned())
                .expect("every point evaluated")
        })
        .collect();
    Ok(SweepResult {
        axis_names: spec
            .axes
            .iter()
            .map(|a| a.parameter.column().to_string())
            .collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedCoupling {
    /// rad/s
    pub g: f64,
    pub fidelity: f64,
    pub diagnostics: Diagnostics,
}

/// Runs the protocol at every candidate reference coupling (rad/s).
///
/// Candidates are sorted and deduplicated; the result follows that order.
pub fn scan_g(template: &RunConfig, candidates: &[f64]) -> Result<Vec<OptimizedCoupling>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted
        .par_iter()
        .map(|&g| {
            let mut cfg = template.clone();
            cfg.params = cfg.params.with_reference_g(g);
            run_protocol(&cfg).map(|r| OptimizedCoupling {
                g,
                fidelity: r.fidelity,
                diagnostics: r.diagnostics,
            })
        })
        .collect()
}

/// Highest fidelity of a scan; ties go to the smaller g.
pub fn best_coupling(scan: &[OptimizedCoupling]) -> Option<OptimizedCoupling> {
    let mut best: Option<OptimizedCoupling> = None;
    for &r in scan {
        let better =
            best.is_none_or(|b| r.fidelity > b.fidelity || (r.fidelity == b.fidelity && r.g < b.g));
        if better {
            best = Some(r);
        }
    }
    best
}

/// Exhaustive search over candidate reference couplings (rad/s).
///
/// Returns the candidate with the highest fidelity; ties go to the smaller g.
pub fn optimize_g(template: &RunConfig, candidates: &[f64]) -> Result<OptimizedCoupling> {
    let scan = scan_g(template, candidates)?;
    Ok(best_coupling(&scan).expect("non-empty candidates"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{basis_state, make_space, DeviceLevel, C64};
    use crate::protocol::noon_target;
    use proptest::prelude::*;

    #[test]
    fn fidelity_examples() {
        let s = make_space(1, 1).unwrap();
        let psi = basis_state(s, DeviceLevel::E, 1, 0).unwrap();
        assert!((fidelity(&psi.to_density(), &psi).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(s);
        assert!((fidelity(&mixed, &psi).unwrap() - 0.25).abs() < 1e-15);

        let s = make_space(3, 3).unwrap();
        let target = noon_target(s, 3).unwrap();
        let half = basis_state(s, DeviceLevel::G, 3, 0).unwrap().to_density();
        assert!((fidelity(&half, &target).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fidelity_rejects_bad_overlaps() {
        let s = make_space(1, 1).unwrap();
        let psi = basis_state(s, DeviceLevel::G, 0, 0).unwrap();
        let mut rho = psi.to_density();
        rho.set(0, 0, C64::new(-1e-3, 0.0));
        assert!(matches!(
            fidelity(&rho, &psi),
            Err(Error::InvalidOverlap { .. })
        ));
        rho.set(0, 0, C64::new(-1e-12, 0.0));
        assert_eq!(fidelity(&rho, &psi).unwrap(), 0.0);
        rho.set(0, 0, C64::new(0.5, 1e-6));
        assert!(fidelity(&rho, &psi).is_err());
    }

    #[test]
    fn diagnostics_examples() {
        let s = make_space(4, 4).unwrap();
        let target = noon_target(s, 3).unwrap();
        let d = diagnostics(&target.to_density());
        assert!(d.trace_drift < 1e-15);
        assert_eq!(d.hermitian_residual, 0.0);
        assert!((d.device_purity - 1.0).abs() < 1e-15);
        assert_eq!(d.edge_population, 0.0);
        assert!(d.min_eigenvalue > -1e-12);

        let mut rho = target.to_density();
        rho.set(0, 5, rho.get(0, 5) + C64::new(0.0, 3e-4));
        assert!((diagnostics(&rho).hermitian_residual - 3e-4).abs() < 1e-15);
    }

    #[test]
    fn sweep_spec_validation() {
        let template = RunConfig::ideal(2, 1.0, 20.0);
        let mut spec = SweepSpec {
            template,
            axes: vec![SweepAxis {
                parameter: SweepParameter::OmegaMhz,
                values: vec![2.0, 1.0],
            }],
            optimize_g_mhz: None,
        };
        assert!(spec.validate().is_err());
        spec.axes[0].values = vec![1.0, 2.0];
        assert!(spec.validate().is_ok());
        spec.optimize_g_mhz = Some(vec![]);
        assert_eq!(spec.validate(), Err(Error::EmptyCandidates));
        spec.optimize_g_mhz = None;
        spec.axes = vec![
            spec.axes[0].clone(),
            spec.axes[0].clone(),
            spec.axes[0].clone(),
        ];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn grid_order_is_row_major() {
        let spec = SweepSpec {
            template: RunConfig::ideal(2, 1.0, 20.0),
            axes: vec![
                SweepAxis {
                    parameter: SweepParameter::N,
                    values: vec![2.0, 3.0],
                },
                SweepAxis {
                    parameter: SweepParameter::OmegaMhz,
                    values: vec![100.0, 200.0, 300.0],
                },
            ],
            optimize_g_mhz: None,
        };
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![2.0, 200.0]);
        assert_eq!(pts[3], vec![3.0, 100.0]);
        let cfg = spec.config_at(&pts[4]).unwrap();
        assert_eq!(cfg.n, 3);
        assert!((cfg.params.omega_rabi - mhz_to_angular(200.0)).abs() < 1e-6);
    }

    #[test]
    fn one_point_sweep_equals_direct_run() {
        let template = RunConfig::ideal(2, mhz_to_angular(5.0), mhz_to_angular(100.0));
        let spec = SweepSpec {
            template: template.clone(),
            axes: vec![SweepAxis {
                parameter: SweepParameter::GMhz,
                values: vec![5.0],
            }],
            optimize_g_mhz: None,
        };
        let res = sweep(&spec, &[], |_| {}).unwrap();
        let direct = run_protocol(&template).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert!((res.rows[0].fidelity - direct.fidelity).abs() < 1e-12);
    }

    #[test]
    fn sweep_records_failures_per_row() {
        let spec = SweepSpec {
            template: RunConfig::ideal(2, 1.0, 20.0),
            axes: vec![SweepAxis {
                parameter: SweepParameter::N,
                values: vec![1.0, 2.0],
            }],
            optimize_g_mhz: None,
        };
        let res = sweep(&spec, &[], |_| {}).unwrap();
        assert!(res.rows[0].error.as_deref().unwrap().contains("N >= 2"));
        assert!(res.rows[0].fidelity.is_nan());
        assert!(res.rows[1].error.is_none());
    }

    #[test]
    fn sweep_resumes_without_recomputing() {
        let spec = SweepSpec {
            template: RunConfig::ideal(2, 1.0, 20.0),
            axes: vec![SweepAxis {
                parameter: SweepParameter::N,
                values: vec![2.0, 3.0],
            }],
            optimize_g_mhz: None,
        };
        let marker = SweepRow {
            axis_values: vec![2.0],
            fidelity: 0.123,
            g_best_mhz: None,
            diagnostics: None,
            wall_ms: 0.0,
            error: None,
        };
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let res = sweep(&spec, &[marker], |_| {
            calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        })
        .unwrap();
        assert_eq!(calls.into_inner(), 1);
        assert_eq!(res.rows[0].fidelity, 0.123);
    }

    #[test]
    fn optimize_single_candidate() {
        let template = RunConfig::ideal(2, 1.0, 50.0);
        let best = optimize_g(&template, &[3.0]).unwrap();
        assert_eq!(best.g, 3.0);
        assert!(matches!(
            optimize_g(&template, &[]),
            Err(Error::EmptyCandidates)
        ));
    }

    #[test]
    fn optimize_is_order_independent() {
        let mut template = RunConfig::ideal(2, 1.0, 8.0);
        template.pulses = crate::protocol::PulseModel::Dynamic;
        let a = optimize_g(&template, &[0.5, 1.0, 2.0]).unwrap();
        let b = optimize_g(&template, &[2.0, 0.5, 1.0]).unwrap();
        assert_eq!(a, b);
        // smaller g keeps the residual coupling during pulses weaker
        assert_eq!(a.g, 0.5);
    }

    proptest! {
        #[test]
        fn mixing_with_target_never_lowers_fidelity(lambda in 0.0f64..=1.0, w in 0.0f64..1.0) {
            let s = make_space(2, 2).unwrap();
            let target = noon_target(s, 2).unwrap();
            let other = basis_state(s, DeviceLevel::F, 1, 1).unwrap()
                .add_scaled(C64::new(w, 0.0), &basis_state(s, DeviceLevel::G, 2, 0).unwrap()).unwrap()
                .normalized();
            let rho = DensityMatrix::maximally_mixed(s).scaled(0.5).add_scaled(0.5, &other.to_density()).unwrap();
            let mixed = rho.clone().scaled(lambda).add_scaled(1.0 - lambda, &target.to_density()).unwrap();
            prop_assert!(fidelity(&mixed, &target).unwrap() >= fidelity(&rho, &target).unwrap() - 1e-15);
        }
    }
}
