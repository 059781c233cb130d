//! Configuration ingestion: JSON documents with flag overrides, validated into the
//! library's run types.

use sdof_galerkin::weakform::{Excitation, SdofSystem};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub c: f64,
    pub k: f64,
}

/// Force specification; mirrors the library's force models one to one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExcitationConfig {
    #[default]
    Zero,
    Constant {
        amplitude: f64,
    },
    PiecewiseConstant {
        values: Vec<f64>,
    },
    PiecewiseExponential {
        amplitudes: Vec<f64>,
    },
    Harmonic {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ExcitationConfig {
    pub fn to_excitation(&self) -> Excitation {
        match self {
            ExcitationConfig::Zero => Excitation::Zero,
            ExcitationConfig::Constant { amplitude } => Excitation::Constant(*amplitude),
            ExcitationConfig::PiecewiseConstant { values } => {
                Excitation::PiecewiseConstant { values: values.clone() }
            }
            ExcitationConfig::PiecewiseExponential { amplitudes } => {
                Excitation::PiecewiseExponential { amplitudes: amplitudes.clone() }
            }
            ExcitationConfig::Harmonic { amplitude, omega, phase } => Excitation::Harmonic {
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
            },
            ExcitationConfig::Tabulated { times, values } => {
                Excitation::Tabulated { times: times.clone(), values: values.clone() }
            }
        }
    }
}

fn default_samples() -> usize {
    10000
}

fn default_dense_per_step() -> usize {
    16
}

/// One simulation run. The step length is given either absolutely (`h`) or as a
/// fraction of the natural period (`h_over_t`), never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_over_t: Option<f64>,
    pub l: usize,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub excitation: ExcitationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_dense_per_step")]
    pub dense_per_step: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemConfig { c: 0.0, k: 1.0 },
            p: 3,
            h: None,
            h_over_t: None,
            l: 1,
            x0: 0.0,
            v0: 0.0,
            excitation: ExcitationConfig::Zero,
            csv_out: None,
            json_out: None,
            seed: None,
            samples: default_samples(),
            dense_per_step: default_dense_per_step(),
        }
    }
}

/// A validated run with the step length resolved to an absolute value.
#[derive(Debug)]
pub struct ResolvedRun {
    pub system: SdofSystem,
    pub p: usize,
    pub h: f64,
    pub l: usize,
    pub x0: f64,
    pub v0: f64,
    pub excitation: Excitation,
}

impl RunConfig {
    /// Checks the invariants and resolves the step length. Conditions that only
    /// degrade accuracy come back as warnings, not errors.
    pub fn resolve(&self) -> Result<(ResolvedRun, Vec<String>), String> {
        let mut warnings = Vec::new();
        let system =
            SdofSystem::new(self.system.c, self.system.k).map_err(|e| format!("system: {e}"))?;
        if self.p < 3 {
            return Err(format!("field p: must be at least 3, got {}", self.p));
        }
        if self.p > 25 {
            warnings
                .push(format!("p = {} exceeds 25; expect numerical-stability loss", self.p));
        }
        let h = match (self.h, self.h_over_t) {
            (Some(h), None) => h,
            (None, Some(f)) => f * system.period(),
            (Some(_), Some(_)) => return Err("set h or h_over_t, not both".into()),
            (None, None) => return Err("one of h or h_over_t is required".into()),
        };
        if !h.is_finite() || !(h > 0.0) {
            return Err(format!("field h: step length must be positive, got {h}"));
        }
        if self.l < 1 {
            return Err(format!("field l: must be at least 1, got {}", self.l));
        }
        if !self.x0.is_finite() || !self.v0.is_finite() {
            return Err("fields x0/v0: initial data must be finite".into());
        }
        if self.dense_per_step < 1 {
            return Err("field dense_per_step: must be at least 1".into());
        }
        let excitation = self.excitation.to_excitation();
        excitation.validate().map_err(|e| format!("field excitation: {e}"))?;
        Ok((
            ResolvedRun {
                system,
                p: self.p,
                h,
                l: self.l,
                x0: self.x0,
                v0: self.v0,
                excitation,
            },
            warnings,
        ))
    }
}

/// Reads a config file, or yields the defaults when no path is given. Parse errors
/// keep serde_json's line/column diagnostics.
pub fn load_config(path: Option<&str>) -> Result<RunConfig, String> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| format!("cannot read {p}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("{p}: {e}"))
        }
    }
}
