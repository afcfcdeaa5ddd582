//! Experiment configuration: the JSON document read by the CLI.
//!
//! ```json
//! {
//!   "id": "E2",
//!   "model": { "perturbation": { "kind": "com-oscillator" } },
//!   "lambdas": { "kind": "decades", "mantissas": [4, 7], "k_min": 2, "k_max": 3 },
//!   "delta": 0.25
//! }
//! ```
//!
//! Every other field has a default; see [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metric::{
    ComOscillator, ConformalMetricModel, Perturbation, ShellPerturbation, ShellSum,
};
use crate::quadrature::Resolution;
use crate::reduced::ReducedOptions;
use crate::solver::{default_seeds, SearchMode, SolverOptions};
use crate::{Error, Result, Vec3};

/// Version of the result/config layout written by the reporter.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
    ];

    pub fn description(self) -> &'static str {
        match self {
            ExperimentId::E1 => {
                "Schwarzschild baseline: mass, center, critical point, Hawking mass"
            }
            ExperimentId::E2 => {
                "center-of-mass oscillator: barycenter alternates between plateaus and gaps"
            }
            ExperimentId::E3 => "shell identities for the gradient of the curvature part",
            ExperimentId::E4 => "convexity inequality and ray map on random draws",
            ExperimentId::E5 => "stationary scan certifying the absence of critical points",
            ExperimentId::E6 => "slow-divergence shells: local minimum near the boundary",
            ExperimentId::Custom => "critical-point trace and flux report for a user model",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentId::E1 => "E1",
            ExperimentId::E2 => "E2",
            ExperimentId::E3 => "E3",
            ExperimentId::E4 => "E4",
            ExperimentId::E5 => "E5",
            ExperimentId::E6 => "E6",
            ExperimentId::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(ExperimentId::E1),
            "E2" => Ok(ExperimentId::E2),
            "E3" => Ok(ExperimentId::E3),
            "E4" => Ok(ExperimentId::E4),
            "E5" => Ok(ExperimentId::E5),
            "E6" => Ok(ExperimentId::E6),
            "CUSTOM" => Ok(ExperimentId::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown experiment id {s:?}"))),
        }
    }
}

/// Area radii to run at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LambdaSchedule {
    List {
        values: Vec<f64>,
    },
    /// `m·10^k` for every mantissa `m` and `k_min ≤ k ≤ k_max`.
    Decades {
        mantissas: Vec<f64>,
        k_min: i32,
        k_max: i32,
    },
}

impl LambdaSchedule {
    /// Values in increasing order.
    pub fn values(&self) -> Vec<f64> {
        let mut v = match self {
            LambdaSchedule::List { values } => values.clone(),
            LambdaSchedule::Decades {
                mantissas,
                k_min,
                k_max,
            } => (*k_min..=*k_max)
                .flat_map(|k| mantissas.iter().map(move |m| m * 10f64.powi(k)))
                .collect(),
        };
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        v.dedup();
        v
    }
}

fn default_delta() -> f64 {
    0.25
}
fn default_cutoff_factor() -> f64 {
    ReducedOptions::default().cutoff_factor
}
fn default_flux_radii() -> Vec<f64> {
    vec![1e3, 1e4, 1e5]
}
fn default_scan_spacing() -> f64 {
    0.05
}
fn default_samples() -> usize {
    500
}
fn default_rng_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub model: ConformalMetricModel,
    pub lambdas: LambdaSchedule,
    /// Critical points are sought in `|ξ| ≤ 1 − δ`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: f64,
    #[serde(default)]
    pub search_mode: SearchMode,
    /// Radii of the flux report; keep them outside the support of ψ.
    #[serde(default = "default_flux_radii")]
    pub flux_radii: Vec<f64>,
    /// Solver seeds; empty means the default star of seeds.
    #[serde(default)]
    pub seeds: Vec<[f64; 3]>,
    #[serde(default = "default_scan_spacing")]
    pub scan_spacing: f64,
    /// Random draws for E4.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    fn base(id: ExperimentId, model: ConformalMetricModel, lambdas: LambdaSchedule) -> Self {
        Self {
            id,
            model,
            lambdas,
            delta: default_delta(),
            resolution: Resolution::default(),
            cutoff_factor: default_cutoff_factor(),
            search_mode: SearchMode::Critical,
            flux_radii: default_flux_radii(),
            seeds: Vec::new(),
            scan_spacing: default_scan_spacing(),
            samples: default_samples(),
            rng_seed: default_rng_seed(),
            out_dir: None,
        }
    }

    /// The registered default configuration of an experiment.
    pub fn preset(id: ExperimentId) -> Self {
        let list = |values: &[f64]| LambdaSchedule::List {
            values: values.to_vec(),
        };
        let with = ConformalMetricModel::with_perturbation;
        match id {
            ExperimentId::E1 => Self {
                flux_radii: vec![1e3, 2e3, 4e3],
                ..Self::base(
                    id,
                    ConformalMetricModel::schwarzschild(),
                    list(&[1e2, 1e3, 1e4]),
                )
            },
            ExperimentId::E2 => Self::base(
                id,
                with(Perturbation::ComOscillator(ComOscillator::default())),
                LambdaSchedule::Decades {
                    mantissas: vec![4.0, 7.0],
                    k_min: 2,
                    k_max: 3,
                },
            ),
            ExperimentId::E3 => {
                let shell = ShellPerturbation {
                    k: 2,
                    l: 2,
                    a: [1.0, 4.0, 4.0, 0.5],
                };
                Self::base(
                    id,
                    with(Perturbation::Shell(shell)),
                    list(&[shell.lambda()]),
                )
            }
            ExperimentId::E4 => {
                Self::base(id, ConformalMetricModel::flat(), list(&[3.0, 30.0, 300.0]))
            }
            ExperimentId::E5 => Self::base(
                id,
                with(Perturbation::ShellSum(ShellSum {
                    k: None,
                    i_min: 2,
                    i_max: 3,
                    a: [1.0, 4.0, 4.0, 10.0],
                })),
                list(&[4e4]),
            ),
            ExperimentId::E6 => Self {
                delta: 0.02,
                search_mode: SearchMode::Minimum,
                ..Self::base(
                    id,
                    with(Perturbation::ShellSum(ShellSum {
                        k: Some(3),
                        i_min: 1,
                        i_max: 3,
                        a: [2.0, 3.0, 5.0, 0.0],
                    })),
                    list(&[9e4]),
                )
            },
            ExperimentId::Custom => {
                Self::base(id, ConformalMetricModel::schwarzschild(), list(&[1e2, 1e3]))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.resolution.validate()?;
        let lambdas = self.lambdas.values();
        if lambdas.is_empty() {
            return Err(Error::InvalidConfig("empty λ schedule".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !(**l > 2.0 && l.is_finite())) {
            return Err(Error::InvalidConfig(format!("λ = {l} must exceed 2")));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "δ = {} must lie in (0, 1/2)",
                self.delta
            )));
        }
        if !(self.cutoff_factor > 2.0) {
            return Err(Error::InvalidConfig(format!(
                "cutoff factor {} must exceed 2",
                self.cutoff_factor
            )));
        }
        if self.flux_radii.len() < 3 || self.flux_radii.iter().any(|r| !(*r > 2.0)) {
            return Err(Error::InvalidConfig(
                "flux report needs at least three radii above 2".into(),
            ));
        }
        if !(self.scan_spacing > 0.0 && self.scan_spacing < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "scan spacing {} must lie in (0, 1)",
                self.scan_spacing
            )));
        }
        if let Some(s) = self
            .seeds
            .iter()
            .find(|s| !(Vec3::from(**s).norm() <= 1.0 - self.delta))
        {
            return Err(Error::InvalidConfig(format!(
                "seed {s:?} lies outside |ξ| <= 1 − δ"
            )));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            reduced: ReducedOptions {
                resolution: self.resolution,
                cutoff_factor: self.cutoff_factor,
            },
            mode: self.search_mode,
            ..SolverOptions::default()
        }
    }

    pub fn seeds(&self) -> Vec<Vec3> {
        if self.seeds.is_empty() {
            default_seeds(self.delta)
        } else {
            self.seeds.iter().map(|s| Vec3::from(*s)).collect()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
