//! Experiment configuration files.
//!
//! Physical quantities carry their unit in the field name (`start_ns`,
//! `t1_us`, `g_over_pi_mhz`, ...).

use std::path::{Path, PathBuf};

use dicke::device::SystemConfig;
use dicke::dynamics::DEFAULT_LINDBLAD_TOL;
use dicke::entanglement::{DEFAULT_BUDGET, DEFAULT_RESTARTS};
use dicke::protocols::{NoiseModel, RunOptions};
use dicke::tomography::{ReadoutOperator, DEFAULT_READOUT};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A preset name, a path to a device file, or an inline device description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSpec {
    Named(String),
    Inline(Box<SystemConfig>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    RabiScan,
    WCollective,
    WSequential,
    Tomography,
    Certify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::RabiScan => "rabi_scan",
            Self::WCollective => "w_collective",
            Self::WSequential => "w_sequential",
            Self::Tomography => "tomography",
            Self::Certify => "certify",
        }
    }
}

/// Uniform interaction-time grid, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub start_ns: f64,
    pub stop_ns: f64,
    pub points: usize,
}

impl TauGrid {
    /// Seconds.
    pub fn times(&self) -> Vec<f64> {
        let step = (self.stop_ns - self.start_ns) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| (self.start_ns + step * k as f64) * 1e-9)
            .collect()
    }
}

/// Three-qubit state fed to tomography or certification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    WPaper,
    Ghz,
    /// Output of the collective protocol under the configured noise model.
    WCollective,
    WSequential,
    /// Density-matrix JSON file, relative to the config file.
    DensityFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceSpec,
    pub experiment: Experiment,
    /// Qubit names; the first one supplies the photon in a Rabi scan.
    #[serde(default)]
    pub participating: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<TauGrid>,
    /// Also scan every prefix of `participating` and regress `f²` on `N`.
    #[serde(default)]
    pub scaling: bool,
    /// Lindblad evolution with the device coherence times.
    #[serde(default)]
    pub noise: bool,
    #[serde(default)]
    pub couple_parked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lindblad_tol: Option<f64>,
    #[serde(default = "default_true")]
    pub phase_correction: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSource>,
    /// Gaussian noise on each tomography outcome.
    #[serde(default)]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<[f64; 8]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}

/// A validated configuration with its device resolved.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub device: SystemConfig,
    /// Indices of `participating`.
    pub participating: Vec<usize>,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Resolved {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            noise: if self.config.noise {
                NoiseModel::Lindblad
            } else {
                NoiseModel::Off
            },
            couple_parked: self.config.couple_parked,
            lindblad_tol: self.config.lindblad_tol.unwrap_or(DEFAULT_LINDBLAD_TOL),
        }
    }

    pub fn readout(&self) -> CliResult<ReadoutOperator<f64>> {
        ReadoutOperator::new(self.config.readout.unwrap_or(DEFAULT_READOUT))
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }

    pub fn restarts(&self) -> usize {
        self.config.restarts.unwrap_or(DEFAULT_RESTARTS)
    }

    pub fn budget(&self) -> usize {
        self.config.budget.unwrap_or(DEFAULT_BUDGET)
    }

    pub fn state(&self) -> StateSource {
        self.config.state.clone().unwrap_or(StateSource::WPaper)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> CliResult<Self> {
        serde_json::from_slice(bytes).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant and resolves the device.
    pub fn resolve(self, base_dir: &Path) -> CliResult<Resolved> {
        let device = load_device(&self.device, base_dir)?;
        let n = device.num_qubits();

        let mut participating = Vec::with_capacity(self.participating.len());
        for name in &self.participating {
            let idx = device
                .qubit_index(name)
                .map_err(|_| CliError::config(format!("unknown qubit '{name}'")))?;
            if participating.contains(&idx) {
                return Err(CliError::config(format!("qubit '{name}' listed twice")));
            }
            participating.push(idx);
        }

        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(CliError::config("sigma must be a non-negative number"));
        }
        if (self.noise || self.sigma > 0.0) && self.seed.is_none() {
            return Err(CliError::config("a seed is required when noise is on or sigma > 0"));
        }
        if let Some(tol) = self.lindblad_tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::config("lindblad_tol must be positive"));
            }
        }
        if self.restarts == Some(0) || self.budget == Some(0) {
            return Err(CliError::config("restarts and budget must be at least 1"));
        }
        if let Some(r) = self.readout {
            ReadoutOperator::new(r).map_err(|e| CliError::config(e.to_string()))?;
        }

        match self.experiment {
            Experiment::RabiScan => {
                if participating.is_empty() {
                    return Err(CliError::config("rabi_scan needs at least one participating qubit"));
                }
                let grid = self
                    .tau_grid
                    .ok_or_else(|| CliError::config("rabi_scan needs a tau_grid"))?;
                if grid.points < 2 {
                    return Err(CliError::config("tau_grid needs at least 2 points"));
                }
                if !(grid.start_ns >= 0.0 && grid.stop_ns > grid.start_ns && grid.stop_ns.is_finite()) {
                    return Err(CliError::config("tau_grid must be ascending and non-negative"));
                }
                if self.scaling && participating.len() < 2 {
                    return Err(CliError::config("scaling needs at least two participating qubits"));
                }
            }
            Experiment::WCollective | Experiment::WSequential => require_three(n, self.experiment)?,
            Experiment::Tomography | Experiment::Certify => {
                let needs_device = matches!(
                    self.state,
                    Some(StateSource::WCollective) | Some(StateSource::WSequential)
                );
                if needs_device {
                    require_three(n, self.experiment)?;
                }
            }
        }

        Ok(Resolved {
            config: self,
            device,
            participating,
            base_dir: base_dir.to_path_buf(),
        })
    }
}

fn require_three(n: usize, e: Experiment) -> CliResult<()> {
    if n != 3 {
        return Err(CliError::config(format!("{} needs a 3-qubit device, got {n}", e.name())));
    }
    Ok(())
}

/// Preset name, device file or inline description.
pub fn load_device(spec: &DeviceSpec, base_dir: &Path) -> CliResult<SystemConfig> {
    let device = match spec {
        DeviceSpec::Inline(cfg) => (**cfg).clone(),
        DeviceSpec::Named(name) if SystemConfig::preset_names().contains(&name.as_str()) => {
            SystemConfig::preset(name).map_err(|e| CliError::config(e.to_string()))?
        }
        DeviceSpec::Named(path) => {
            let p = base_dir.join(path);
            let bytes = std::fs::read(&p).map_err(|_| {
                CliError::config(format!("'{path}' is neither a preset nor a readable device file"))
            })?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::config(format!("invalid device file {}: {e}", p.display())))?
        }
    };
    device.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(device)
}
