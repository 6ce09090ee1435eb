//! Python face of the optimizer: experiments, objectives, and the three
//! search modes, plus the oracle cross-check. Configuration reuses the same
//! JSON schema as the command line, so a Python session and a CLI run of the
//! same document and seed produce the same numbers.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tcrab_core::bench::{run_identity_sweep, verify_points};
use tcrab_core::config::ExperimentConfig;
use tcrab_core::experiments::{Experiment as CoreExperiment, ExperimentKind};
use tcrab_core::lindblad::oracle_fidelity;
use tcrab_core::optimize::{
    crab_optimize_cold, tcrab_basinhopping, tcrab_bisection, BasinHoppingConfig,
    BisectionConfig, CrabEvaluator, LocalConfig, OptimizationOutcome,
};
use tcrab_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Dimension { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn local_config(max_fun: Option<usize>) -> LocalConfig {
    match max_fun {
        Some(n) => LocalConfig { max_fun: n, ..LocalConfig::default() },
        None => LocalConfig::default(),
    }
}

/// Result of one optimization run.
#[pyclass(frozen, get_all)]
struct Outcome {
    t_opt: f64,
    alpha_opt: Vec<f64>,
    infidelity: f64,
    n_fun_evals: usize,
    converged_reason: String,
}

impl Outcome {
    fn from_core(o: OptimizationOutcome) -> Self {
        Self {
            t_opt: o.t_opt,
            alpha_opt: o.alpha_opt,
            infidelity: o.infidelity,
            n_fun_evals: o.n_fun_evals,
            converged_reason: o.converged_reason.name().to_string(),
        }
    }
}

#[pymethods]
impl Outcome {
    fn __repr__(&self) -> String {
        format!(
            "Outcome(t_opt={:.6}, infidelity={:.6e}, n_fun_evals={}, converged_reason='{}')",
            self.t_opt, self.infidelity, self.n_fun_evals, self.converged_reason
        )
    }
}

/// One shortcut-vs-oracle comparison row.
#[pyclass(frozen, get_all)]
struct VerifyPoint {
    t: f64,
    seed: u64,
    fidelity_shortcut: f64,
    fidelity_oracle: f64,
    abs_diff: f64,
    certified: bool,
    commutator_norm: f64,
}

#[pymethods]
impl VerifyPoint {
    fn __repr__(&self) -> String {
        format!(
            "VerifyPoint(t={:.6}, abs_diff={:.3e}, certified={})",
            self.t,
            self.abs_diff,
            if self.certified { "True" } else { "False" }
        )
    }
}

/// A benchmark system: drift, controls, target, noise, and sweep window.
#[pyclass(frozen)]
struct Experiment {
    inner: CoreExperiment,
}

#[pymethods]
impl Experiment {
    /// Build a named experiment with its published parameters.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let kind = ExperimentKind::from_name(name).map_err(py_err)?;
        Ok(Self { inner: kind.default_experiment().map_err(py_err)? })
    }

    /// Build from a config document (same JSON schema as the command line).
    #[staticmethod]
    fn from_config(json: &str) -> PyResult<Self> {
        let config = ExperimentConfig::from_json(json).map_err(py_err)?;
        Ok(Self { inner: config.experiment().map_err(py_err)? })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n_logical(&self) -> usize {
        self.inner.n_logical()
    }

    #[getter]
    fn t_max(&self) -> f64 {
        self.inner.t_max()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps()
    }

    /// Draw the frequency templates from `seed` and compile the objective.
    fn evaluator(&self, seed: u64) -> PyResult<Evaluator> {
        let templates = self.inner.seeded_templates(seed).map_err(py_err)?;
        let evaluator = self.inner.evaluator(&templates).map_err(py_err)?;
        Ok(Evaluator { experiment: self.inner.clone(), evaluator })
    }

    /// Optimize toward doing nothing at every grid time; returns
    /// (T, infidelity, n_fun_evals) rows.
    #[pyo3(signature = (n_points, seed, max_fun = None))]
    fn identity_sweep(
        &self,
        n_points: usize,
        seed: u64,
        max_fun: Option<usize>,
    ) -> PyResult<Vec<(f64, f64, usize)>> {
        let points = run_identity_sweep(&self.inner, n_points, seed, &local_config(max_fun))
            .map_err(py_err)?;
        Ok(points.into_iter().map(|p| (p.t, p.infidelity, p.n_fun_evals)).collect())
    }

    /// Compare the fast objective against the master-equation integrator at
    /// random (T, coefficient) draws.
    fn verify(&self, points: usize, seed: u64) -> PyResult<Vec<VerifyPoint>> {
        let rows = verify_points(&self.inner, points, seed).map_err(py_err)?;
        Ok(rows
            .into_iter()
            .map(|r| VerifyPoint {
                t: r.t,
                seed: r.seed,
                fidelity_shortcut: r.fidelity_shortcut,
                fidelity_oracle: r.fidelity_oracle,
                abs_diff: r.abs_diff,
                certified: r.certified,
                commutator_norm: r.commutator_norm,
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Experiment(name='{}', m={}, t_max={}, n_steps={})",
            self.name(),
            self.m(),
            self.t_max(),
            self.n_steps()
        )
    }
}

/// Compiled objective: infidelity as a function of (T, coefficients).
#[pyclass(frozen)]
struct Evaluator {
    experiment: CoreExperiment,
    evaluator: CrabEvaluator,
}

#[pymethods]
impl Evaluator {
    #[getter]
    fn n_parameters(&self) -> usize {
        self.evaluator.n_parameters()
    }

    #[getter]
    fn t_max(&self) -> f64 {
        self.evaluator.t_max()
    }

    /// The fast objective at evolution time `t` and flat coefficient
    /// vector `alpha` ([offset, cos_1, sin_1, ...] per control).
    fn infidelity(&self, t: f64, alpha: Vec<f64>) -> PyResult<f64> {
        self.evaluator.infidelity(t, &alpha).map_err(py_err)
    }

    /// Ground-truth fidelity from dense master-equation integration of the
    /// same pulses (the lifted state-transfer problem for gate targets).
    fn oracle_fidelity(&self, t: f64, alpha: Vec<f64>) -> PyResult<f64> {
        let pulses = self.evaluator.pulses_with(&alpha).map_err(py_err)?;
        let problem = self.experiment.state_problem(&pulses).map_err(py_err)?;
        oracle_fidelity(&problem, t).map_err(py_err)
    }

    /// Fixed-time local optimization from zero coefficients.
    #[pyo3(signature = (t, max_fun = None))]
    fn optimize(&self, t: f64, max_fun: Option<usize>) -> PyResult<Outcome> {
        crab_optimize_cold(&self.evaluator, t, &local_config(max_fun))
            .map(Outcome::from_core)
            .map_err(py_err)
    }

    /// Joint (T, coefficients) search by basin hopping from `t_init`.
    #[pyo3(signature = (t_init, seed, n_iterations = None, max_fun = None))]
    fn basinhopping(
        &self,
        t_init: f64,
        seed: u64,
        n_iterations: Option<usize>,
        max_fun: Option<usize>,
    ) -> PyResult<Outcome> {
        let mut bh = BasinHoppingConfig::default();
        if let Some(n) = n_iterations {
            bh.n_iterations = n;
        }
        tcrab_basinhopping(&self.evaluator, t_init, seed, &local_config(max_fun), &bh, None)
            .map(Outcome::from_core)
            .map_err(py_err)
    }

    /// Time optimization by derivative bisection on the optimized-infidelity
    /// profile over [t_lo, t_hi].
    #[pyo3(signature = (t_lo, t_hi, max_fun = None))]
    fn bisection(&self, t_lo: f64, t_hi: f64, max_fun: Option<usize>) -> PyResult<Outcome> {
        let config = BisectionConfig {
            t_lo,
            t_hi,
            fd_step_t: 1e-3,
            tol_derivative: 1e-6,
            tol_interval: 1e-2,
            warm_start: true,
        };
        tcrab_bisection(&self.evaluator, &config, &local_config(max_fun))
            .map(Outcome::from_core)
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Evaluator(experiment='{}', n_parameters={}, t_max={})",
            self.experiment.kind().name(),
            self.n_parameters(),
            self.t_max()
        )
    }
}

/// Names accepted by `Experiment.preset`.
#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    ExperimentKind::ALL.iter().map(|k| k.name()).collect()
}

#[pymodule]
fn tcrab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Experiment>()?;
    m.add_class::<Evaluator>()?;
    m.add_class::<Outcome>()?;
    m.add_class::<VerifyPoint>()?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
