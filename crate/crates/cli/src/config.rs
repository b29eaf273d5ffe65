// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! TOML configuration files.
//!
//! Every physical quantity carries its unit in the key name (`_mhz`, `_us`,
//! `_ratio`). A file may name a `preset`; its own keys are then merged over
//! the preset table.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use noon_core::lindblad::StepPolicy;
use noon_core::units::{lifetime_us_to_rate, mhz_to_angular};
use noon_core::{
    CrosstalkMode, NoiseRates, PhysicalParams, PulseModel, RunConfig, ScheduleMode, SweepAxis,
    SweepParameter, SweepSpec,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const PRESETS: [(&str, &str); 3] = [
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("ideal", include_str!("../presets/ideal.toml")),
];

pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            anyhow!("unknown preset `{name}` (known: {})", known.join(", "))
        })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `false` switches every channel off.
    pub enabled: Option<bool>,
    pub kappa1_us: Option<f64>,
    pub kappa2_us: Option<f64>,
    pub gamma_ae_us: Option<f64>,
    pub gamma_af_us: Option<f64>,
    pub gamma_ag_us: Option<f64>,
    pub gamma_ef_us: Option<f64>,
    pub gamma_eg_us: Option<f64>,
    pub gamma_fg_us: Option<f64>,
    pub gphi_a_us: Option<f64>,
    pub gphi_e_us: Option<f64>,
    pub gphi_f_us: Option<f64>,
}

/// Either an explicit list or an inclusive `start..=stop` range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueList {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub parameter: SweepParameter,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Option<Vec<AxisSection>>,
    pub optimize_g_mhz: Option<ValueList>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub omega_mhz: Option<f64>,
    pub g_mhz: Option<f64>,
    pub g1_ratio: Option<f64>,
    pub g2_ratio: Option<f64>,
    pub gprime_ratio: Option<f64>,
    pub g12_ratio: Option<f64>,
    pub delta_mhz: Option<f64>,
    /// Photon cutoffs `[cavity 1, cavity 2]`.
    pub nmax: Option<[usize; 2]>,
    pub steps_per_period: Option<f64>,
    pub crosstalk: Option<CrosstalkMode>,
    pub pulses: Option<PulseModel>,
    pub schedule: Option<ScheduleMode>,
    pub noise: Option<NoiseSection>,
    pub sweep: Option<SweepSection>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ConfigFile {
    /// Parses configuration text strictly and merges it over its preset.
    pub fn parse(text: &str) -> Result<Self> {
        // Strict pass on the user text alone so errors point at its lines.
        let own: ConfigFile = toml::from_str(text)?;
        let Some(name) = own.preset.clone() else {
            return Ok(own);
        };
        let mut table: toml::Table = toml::from_str(preset_source(&name)?)
            .with_context(|| format!("preset `{name}` is malformed"))?;
        merge(&mut table, toml::from_str(text)?);
        let merged: ConfigFile = toml::Value::Table(table).try_into()?;
        Ok(merged)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        Self::parse(&format!("preset = \"{name}\"\n"))
    }

    /// SHA-256 over the canonical JSON form of the resolved configuration,
    /// leaving out the output path and worker count.
    pub fn digest(&self) -> String {
        let physics = ConfigFile {
            out: None,
            workers: None,
            ..self.clone()
        };
        let json = serde_json::to_vec(&physics).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| anyhow!("missing key `{key}`"))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let g = mhz_to_angular(Self::require(self.g_mhz, "g_mhz")?);
        let params = PhysicalParams {
            g,
            g1: g * Self::require(self.g1_ratio, "g1_ratio")?,
            g2: g * Self::require(self.g2_ratio, "g2_ratio")?,
            gprime: g * Self::require(self.gprime_ratio, "gprime_ratio")?,
            omega_rabi: mhz_to_angular(Self::require(self.omega_mhz, "omega_mhz")?),
            g12: g * Self::require(self.g12_ratio, "g12_ratio")?,
            delta: mhz_to_angular(Self::require(self.delta_mhz, "delta_mhz")?),
        };
        let cfg = RunConfig {
            n: Self::require(self.n, "n")?,
            params,
            rates: self.noise_rates()?,
            nmax: self.nmax.map(|[a, b]| (a, b)),
            step_policy: StepPolicy {
                steps_per_period: self
                    .steps_per_period
                    .unwrap_or(StepPolicy::default().steps_per_period),
            },
            crosstalk: Self::require(self.crosstalk, "crosstalk")?,
            pulses: Self::require(self.pulses, "pulses")?,
            schedule: self.schedule.unwrap_or(ScheduleMode::Synchronous),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn noise_rates(&self) -> Result<NoiseRates> {
        let Some(noise) = &self.noise else {
            bail!("missing table `[noise]`");
        };
        if noise.enabled == Some(false) {
            return Ok(NoiseRates::none());
        }
        let rate = |v: Option<f64>, key: &str| -> Result<f64> {
            let us = v.ok_or_else(|| anyhow!("missing key `noise.{key}`"))?;
            if us.is_nan() || us <= 0.0 {
                bail!("`noise.{key}` must be a positive lifetime (use inf to disable), got {us}");
            }
            Ok(lifetime_us_to_rate(us))
        };
        Ok(NoiseRates {
            kappa1: rate(noise.kappa1_us, "kappa1_us")?,
            kappa2: rate(noise.kappa2_us, "kappa2_us")?,
            gamma_ae: rate(noise.gamma_ae_us, "gamma_ae_us")?,
            gamma_af: rate(noise.gamma_af_us, "gamma_af_us")?,
            gamma_ag: rate(noise.gamma_ag_us, "gamma_ag_us")?,
            gamma_ef: rate(noise.gamma_ef_us, "gamma_ef_us")?,
            gamma_eg: rate(noise.gamma_eg_us, "gamma_eg_us")?,
            gamma_fg: rate(noise.gamma_fg_us, "gamma_fg_us")?,
            gphi_a: rate(noise.gphi_a_us, "gphi_a_us")?,
            gphi_e: rate(noise.gphi_e_us, "gphi_e_us")?,
            gphi_f: rate(noise.gphi_f_us, "gphi_f_us")?,
        })
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let template = self.run_config()?;
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| anyhow!("missing table `[sweep]`"))?;
        let axes = section
            .axes
            .as_ref()
            .ok_or_else(|| anyhow!("missing key `sweep.axes`"))?
            .iter()
            .map(|a| {
                let list = ValueList {
                    values: a.values.clone(),
                    start: a.start,
                    stop: a.stop,
                    step: a.step,
                };
                let values =
                    expand(&list).with_context(|| format!("axis `{}`", a.parameter.column()))?;
                Ok(SweepAxis {
                    parameter: a.parameter,
                    values,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let optimize_g_mhz = match &section.optimize_g_mhz {
            Some(list) => Some(expand(list).context("sweep.optimize_g_mhz")?),
            None => None,
        };
        let spec = SweepSpec {
            template,
            axes,
            optimize_g_mhz,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Expands a value list; range points are rounded to 1e-9 so that
/// `start + k·step` lands on the decimal grid.
pub fn expand(list: &ValueList) -> Result<Vec<f64>> {
    match (&list.values, list.start, list.stop, list.step) {
        (Some(v), None, None, None) => Ok(v.clone()),
        (None, Some(start), Some(stop), Some(step)) => {
            if step.is_nan()
                || step <= 0.0
                || !start.is_finite()
                || !stop.is_finite()
                || stop < start
            {
                bail!("range needs finite start <= stop and step > 0");
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count)
                .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => bail!("give either `values` or all of `start`, `stop`, `step`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for (name, _) in PRESETS {
            let cfg = ConfigFile::from_preset(name).unwrap();
            cfg.run_config().unwrap();
        }
        let fig3 = ConfigFile::from_preset("fig3")
            .unwrap()
            .sweep_spec()
            .unwrap();
        assert_eq!(fig3.points().len(), 5 * 29);
        let fig4 = ConfigFile::from_preset("fig4")
            .unwrap()
            .sweep_spec()
            .unwrap();
        assert_eq!(fig4.points().len(), 9 * 3);
        assert_eq!(fig4.optimize_g_mhz.as_ref().unwrap().len(), 29);
    }

    #[test]
    fn user_keys_override_preset() {
        let cfg =
            ConfigFile::parse("preset = \"fig3\"\nn = 4\n[noise]\ngphi_a_us = 1.0\n").unwrap();
        assert_eq!(cfg.n, Some(4));
        let noise = cfg.noise.as_ref().unwrap();
        assert_eq!(noise.gphi_a_us, Some(1.0));
        assert_eq!(noise.kappa1_us, Some(20.0));
        let run = cfg.run_config().unwrap();
        assert!((run.params.g1 / run.params.g - 0.95).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ConfigFile::parse("preset = \"fig3\"\nomega_ghz = 3.0\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("omega_ghz"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
        assert!(ConfigFile::parse("[noise]\nkappa_us = 1.0\n").is_err());
    }

    #[test]
    fn missing_keys_are_named() {
        let err = ConfigFile::parse("n = 3\n")
            .unwrap()
            .run_config()
            .unwrap_err();
        assert!(err.to_string().contains("g_mhz"));
    }

    #[test]
    fn infinite_lifetime_disables_a_channel() {
        let cfg = ConfigFile::parse("preset = \"fig3\"\n[noise]\nkappa1_us = inf\n").unwrap();
        let rates = cfg.run_config().unwrap().rates;
        assert_eq!(rates.kappa1, 0.0);
        assert!(rates.kappa2 > 0.0);
    }

    #[test]
    fn ranges_land_on_decimal_grid() {
        let v = expand(&ValueList {
            start: Some(1.0),
            stop: Some(15.0),
            step: Some(0.5),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(v.len(), 29);
        assert_eq!(v[17], 9.5);
        assert_eq!(*v.last().unwrap(), 15.0);
        assert!(expand(&ValueList::default()).is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = ConfigFile::from_preset("fig3").unwrap();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.workers = Some(8);
        assert_eq!(a.digest(), b.digest());
        b.n = Some(5);
        assert_ne!(a.digest(), b.digest());
    }
}
