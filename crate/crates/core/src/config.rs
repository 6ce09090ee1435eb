//! JSON experiment configuration: schema, validation, and assembly into the
//! runtime objects the harness consumes.
//!
//! Every section is optional; omitted fields fall back to the experiment's
//! published values. Unknown fields anywhere are rejected so a typo cannot
//! silently run a different experiment than intended.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::FrequencyMode;
use crate::bench::{BenchSettings, RunMode};
use crate::experiments::{
    josephson_problem, lmg_problem, spin_cz_dipole_problem, spin_cz_swap_problem,
    Experiment, ExperimentKind, DEFAULT_OMEGA_MAX, SWEEP_POINTS, SWEEP_T_MAX,
};
use crate::noise::NoiseModel;
use crate::optimize::{BasinHoppingConfig, BisectionConfig, LocalConfig};
use crate::propagate::DEFAULT_N_STEPS;
use crate::{Error, Result};

/// Experiment-specific physical parameters. Which fields apply depends on
/// the experiment; supplying one that does not apply is a config error.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(rename = "E_J", default, skip_serializing_if = "Option::is_none")]
    pub e_j: Option<f64>,
    #[serde(rename = "E_C", default, skip_serializing_if = "Option::is_none")]
    pub e_c: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "delta_E1", default, skip_serializing_if = "Option::is_none")]
    pub delta_e1: Option<f64>,
    #[serde(rename = "delta_E2", default, skip_serializing_if = "Option::is_none")]
    pub delta_e2: Option<f64>,
}

impl ParamsSection {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.e_j.is_some() {
            out.push("E_J");
        }
        if self.e_c.is_some() {
            out.push("E_C");
        }
        if self.n.is_some() {
            out.push("N");
        }
        if self.j.is_some() {
            out.push("J");
        }
        if self.gamma.is_some() {
            out.push("gamma");
        }
        if self.delta_e1.is_some() {
            out.push("delta_E1");
        }
        if self.delta_e2.is_some() {
            out.push("delta_E2");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    /// Basis size; defaults to the experiment's published value.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default = "default_omega_mode")]
    pub omega_mode: FrequencyMode,
    /// Band edge in uniform-band mode, reference period otherwise.
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self { m: None, omega_mode: default_omega_mode(), omega_max: default_omega_max() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinHoppingSection {
    #[serde(default = "default_bh_iterations")]
    pub n_iterations: usize,
    #[serde(default = "default_bh_step")]
    pub step_size: f64,
    #[serde(default = "default_bh_temperature")]
    pub temperature: f64,
}

impl Default for BasinHoppingSection {
    fn default() -> Self {
        Self {
            n_iterations: default_bh_iterations(),
            step_size: default_bh_step(),
            temperature: default_bh_temperature(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectionSection {
    #[serde(default)]
    pub t_lo: f64,
    /// Defaults to the sweep's T_max.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
    #[serde(default = "default_fd_step_t")]
    pub fd_step_t: f64,
    #[serde(default = "default_tol_derivative")]
    pub tol_derivative: f64,
    #[serde(default = "default_tol_interval")]
    pub tol_interval: f64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

impl Default for BisectionSection {
    fn default() -> Self {
        Self {
            t_lo: 0.0,
            t_hi: None,
            fd_step_t: default_fd_step_t(),
            tol_derivative: default_tol_derivative(),
            tol_interval: default_tol_interval(),
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_max_fun")]
    pub max_fun: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_ftol")]
    pub ftol: f64,
    #[serde(default = "default_gtol")]
    pub gtol: f64,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    #[serde(default)]
    pub basinhopping: BasinHoppingSection,
    #[serde(default)]
    pub bisection: BisectionSection,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            max_fun: default_max_fun(),
            fd_step: default_fd_step(),
            ftol: default_ftol(),
            gtol: default_gtol(),
            memory: default_memory(),
            mode: default_mode(),
            basinhopping: BasinHoppingSection::default(),
            bisection: BisectionSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "N_S", default = "default_n_s")]
    pub n_s: usize,
    #[serde(rename = "T_max", default = "default_t_max")]
    pub t_max: f64,
    /// Propagation steps per objective evaluation.
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { n_s: default_n_s(), t_max: default_t_max(), n_steps: default_n_steps() }
    }
}

fn default_omega_mode() -> FrequencyMode {
    FrequencyMode::UniformBand
}
fn default_omega_max() -> f64 {
    DEFAULT_OMEGA_MAX
}
fn default_bh_iterations() -> usize {
    BasinHoppingConfig::default().n_iterations
}
fn default_bh_step() -> f64 {
    BasinHoppingConfig::default().step_size
}
fn default_bh_temperature() -> f64 {
    BasinHoppingConfig::default().temperature
}
fn default_fd_step_t() -> f64 {
    1e-3
}
fn default_tol_derivative() -> f64 {
    1e-6
}
fn default_tol_interval() -> f64 {
    1e-2
}
fn default_true() -> bool {
    true
}
fn default_max_fun() -> usize {
    LocalConfig::default().max_fun
}
fn default_fd_step() -> f64 {
    LocalConfig::default().fd_step
}
fn default_ftol() -> f64 {
    LocalConfig::default().ftol
}
fn default_gtol() -> f64 {
    LocalConfig::default().gtol
}
fn default_memory() -> usize {
    LocalConfig::default().memory
}
fn default_mode() -> RunMode {
    RunMode::Both
}
fn default_n_s() -> usize {
    SWEEP_POINTS
}
fn default_t_max() -> f64 {
    SWEEP_T_MAX
}
fn default_n_steps() -> usize {
    DEFAULT_N_STEPS
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Root of the experiment JSON schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    /// Defaults to the experiment's published noise model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Replicate master seeds: the benchmark executes once per entry.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    /// Parse and validate a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Load a config file; returns the config and the SHA-256 hex digest of
    /// the raw file bytes. Read failures are config errors: a missing file
    /// is the caller's mistake, not a numerical one.
    pub fn from_path(path: &Path) -> Result<(Self, String)> {
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
        let config = Self::from_json(text)?;
        Ok((config, hex_digest(&bytes)))
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must list at least one master seed".into()));
        }
        if self.sweep.n_s == 0 {
            return Err(Error::Config("sweep N_S must be at least 1".into()));
        }
        if !(self.sweep.t_max > 0.0) {
            return Err(Error::Config(format!(
                "sweep T_max must be positive, got {}",
                self.sweep.t_max
            )));
        }
        if self.sweep.n_steps == 0 {
            return Err(Error::Config("sweep n_steps must be at least 1".into()));
        }
        let allowed: &[&str] = match self.experiment {
            ExperimentKind::Josephson => &["E_J", "E_C"],
            ExperimentKind::Lmg => &["N", "J", "gamma"],
            ExperimentKind::SpinCzSwap | ExperimentKind::SpinCzDipole => {
                &["delta_E1", "delta_E2"]
            }
        };
        for name in self.params.present() {
            if !allowed.contains(&name) {
                return Err(Error::Config(format!(
                    "parameter {name} does not apply to {}",
                    self.experiment.name()
                )));
            }
        }
        Ok(())
    }

    /// Build the configured experiment.
    pub fn experiment(&self) -> Result<Experiment> {
        let noise =
            self.noise.clone().unwrap_or_else(|| self.experiment.default_noise());
        let m = self.ansatz.m.unwrap_or_else(|| self.experiment.default_m());
        let p = &self.params;
        let experiment = match self.experiment {
            ExperimentKind::Josephson => josephson_problem(
                p.e_j.unwrap_or(1.0),
                p.e_c.unwrap_or(-1.0),
                noise,
                m,
            ),
            ExperimentKind::Lmg => lmg_problem(
                p.n.unwrap_or(3),
                p.j.unwrap_or(1.0),
                p.gamma.unwrap_or(0.0),
                noise,
                m,
            ),
            ExperimentKind::SpinCzSwap => spin_cz_swap_problem(
                p.delta_e1.unwrap_or(1.5),
                p.delta_e2.unwrap_or(0.5),
                noise,
                m,
            ),
            ExperimentKind::SpinCzDipole => spin_cz_dipole_problem(
                p.delta_e1.unwrap_or(1.0),
                p.delta_e2.unwrap_or(1.0),
                noise,
                m,
            ),
        }?;
        experiment
            .with_ansatz(self.ansatz.omega_mode, self.ansatz.omega_max)?
            .with_sweep(self.sweep.n_steps, self.sweep.t_max)
    }

    /// Harness settings for one replicate.
    pub fn settings(&self, master_seed: u64, threads: usize) -> BenchSettings {
        let o = &self.optimizer;
        BenchSettings {
            mode: o.mode,
            n_points: self.sweep.n_s,
            master_seed,
            threads,
            local: LocalConfig {
                max_fun: o.max_fun,
                fd_step: o.fd_step,
                ftol: o.ftol,
                gtol: o.gtol,
                memory: o.memory,
            },
            basinhopping: BasinHoppingConfig {
                n_iterations: o.basinhopping.n_iterations,
                step_size: o.basinhopping.step_size,
                temperature: o.basinhopping.temperature,
            },
            bisection: BisectionConfig {
                t_lo: o.bisection.t_lo,
                t_hi: o.bisection.t_hi.unwrap_or(self.sweep.t_max),
                fd_step_t: o.bisection.fd_step_t,
                tol_derivative: o.bisection.tol_derivative,
                tol_interval: o.bisection.tol_interval,
                warm_start: o.bisection.warm_start,
            },
        }
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
