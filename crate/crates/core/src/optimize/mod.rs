//! Pulse-coefficient optimization at fixed gate time, joint basin hopping
//! over (T, coefficients), and bisection on the time derivative of the
//! locally optimal infidelity.
//!
//! All three entry points share one objective assembly, [`CrabEvaluator`]:
//! a fixed-frequency ansatz, a propagation path, and a scoring rule picked
//! from the problem's noise certificate (pure overlap, noise-weighted
//! target observable, or the equivalent gate-compiled observable that
//! propagates only the logical register).

pub mod lbfgsb;

pub use lbfgsb::{local_optimize, Bounds, LocalConfig, LocalResult, StopReason};

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ansatz::PulseAnsatz;
use crate::choi::GateObservable;
use crate::fidelity::{noiseless_fidelity, NoisyTargetObservable, DEFAULT_TRUNCATION_THRESHOLD};
use crate::pauli::PauliSum;
use crate::propagate::{ControlProblem, Stepper};
use crate::{C64, Error, Result};

/// Coefficient box: every ansatz coefficient lives in [-100, 100].
pub const ALPHA_BOUND: f64 = 100.0;

/// What one optimization produced and why it stopped.
#[derive(Clone, Debug, Serialize)]
pub struct OptimizationOutcome {
    pub t_opt: f64,
    pub alpha_opt: Vec<f64>,
    pub infidelity: f64,
    pub n_fun_evals: usize,
    /// (iteration, best value so far). For bisection the index counts
    /// profile evaluations and the value is the infidelity sampled there.
    pub trace: Vec<(usize, f64)>,
    pub converged_reason: ConvergedReason,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergedReason {
    /// Relative objective improvement fell below ftol.
    Ftol,
    /// Projected gradient fell below gtol.
    Gtol,
    /// Evaluation budget exhausted.
    MaxFun,
    /// Local line search could not make progress.
    LineSearchStalled,
    /// Basin hopping completed its outer iteration budget.
    IterationsComplete,
    /// Bisection: |dI/dT| at the midpoint fell below tol_derivative.
    DerivativeTolerance,
    /// Bisection: the bracket shrank below tol_interval.
    IntervalTolerance,
    /// Bisection: both endpoint derivatives had the same sign; the better
    /// endpoint was returned instead of a certified interior extremum.
    NoBracketedExtremum,
}

impl ConvergedReason {
    pub fn name(self) -> &'static str {
        match self {
            ConvergedReason::Ftol => "ftol",
            ConvergedReason::Gtol => "gtol",
            ConvergedReason::MaxFun => "max_fun",
            ConvergedReason::LineSearchStalled => "line_search_stalled",
            ConvergedReason::IterationsComplete => "iterations_complete",
            ConvergedReason::DerivativeTolerance => "derivative_tolerance",
            ConvergedReason::IntervalTolerance => "interval_tolerance",
            ConvergedReason::NoBracketedExtremum => "no_bracketed_extremum",
        }
    }
}

impl From<StopReason> for ConvergedReason {
    fn from(r: StopReason) -> Self {
        match r {
            StopReason::Ftol => ConvergedReason::Ftol,
            StopReason::Gtol => ConvergedReason::Gtol,
            StopReason::MaxFun => ConvergedReason::MaxFun,
            StopReason::LineSearchStalled => ConvergedReason::LineSearchStalled,
        }
    }
}

enum TargetKind {
    /// |<target|psi(T)>|^2 on the propagated state.
    Pure { initial: DVector<C64>, target: DVector<C64> },
    /// Noise-weighted target observable on the propagated state.
    Observable { initial: DVector<C64>, obs: NoisyTargetObservable },
    /// Noise-weighted gate observable on the propagated logical unitary.
    Gate { obs: GateObservable },
    /// |Tr(V^dag U)|^2 / dim^2 on the propagated logical unitary.
    GatePure { target: DMatrix<C64> },
}

/// Infidelity objective with frozen ansatz frequencies.
pub struct CrabEvaluator {
    stepper: Stepper,
    templates: Vec<PulseAnsatz>,
    n_parameters: usize,
    n_steps: usize,
    t_max: f64,
    kind: TargetKind,
}

impl CrabEvaluator {
    /// State-transfer objective. The scoring rule follows the problem's
    /// noise: pure overlap when noiseless, otherwise the noise-weighted
    /// observable, which requires a commuting certificate.
    pub fn for_problem(problem: &ControlProblem) -> Result<Self> {
        let kind = if problem.noise.is_noiseless() {
            TargetKind::Pure {
                initial: problem.initial_state.clone(),
                target: problem.target_state.clone(),
            }
        } else {
            let spectrum = problem.noise.spectrum(problem.n_qubits())?;
            let cert = problem.certify()?;
            let obs = NoisyTargetObservable::new(
                &problem.target_state,
                &spectrum,
                &cert,
                DEFAULT_TRUNCATION_THRESHOLD,
            )?;
            TargetKind::Observable { initial: problem.initial_state.clone(), obs }
        };
        Self::assemble(problem, kind)
    }

    /// Like [`Self::for_problem`] but skips the commutation certificate.
    /// The caller asserts that the noise commutes with every Hamiltonian
    /// term; a false assertion silently degrades the objective into an
    /// approximation of the true channel fidelity.
    pub fn for_problem_assume_commuting(problem: &ControlProblem) -> Result<Self> {
        let kind = if problem.noise.is_noiseless() {
            TargetKind::Pure {
                initial: problem.initial_state.clone(),
                target: problem.target_state.clone(),
            }
        } else {
            let spectrum = problem.noise.spectrum(problem.n_qubits())?;
            let obs = NoisyTargetObservable::assume_commuting(
                &problem.target_state,
                &spectrum,
                DEFAULT_TRUNCATION_THRESHOLD,
            )?;
            TargetKind::Observable { initial: problem.initial_state.clone(), obs }
        };
        Self::assemble(problem, kind)
    }

    fn assemble(problem: &ControlProblem, kind: TargetKind) -> Result<Self> {
        let hams: Vec<PauliSum> = problem.controls.iter().map(|(h, _)| h.clone()).collect();
        let stepper = Stepper::new(&problem.drift, &hams)?;
        let templates = problem.pulses();
        let n_parameters = templates.iter().map(|p| p.n_coefficients()).sum();
        Ok(Self {
            stepper,
            templates,
            n_parameters,
            n_steps: problem.n_steps,
            t_max: problem.t_max,
            kind,
        })
    }

    /// Gate-compilation objective over the logical register only. `obs`
    /// comes from [`GateObservable::from_lifted`] on the doubled problem;
    /// drift and controls are the logical operators.
    pub fn for_gate(
        drift: &PauliSum,
        controls: &[(PauliSum, PulseAnsatz)],
        obs: GateObservable,
        n_steps: usize,
        t_max: f64,
    ) -> Result<Self> {
        if drift.n_qubits() != obs.n_logical() {
            return Err(Error::Dimension { expected: obs.n_logical(), got: drift.n_qubits() });
        }
        Self::assemble_gate(drift, controls, TargetKind::Gate { obs }, n_steps, t_max)
    }

    /// Noiseless gate-compilation objective: squared normalized trace
    /// overlap with `target` on the propagated logical unitary.
    pub fn for_gate_pure(
        drift: &PauliSum,
        controls: &[(PauliSum, PulseAnsatz)],
        target: DMatrix<C64>,
        n_steps: usize,
        t_max: f64,
    ) -> Result<Self> {
        let dim = 1usize << drift.n_qubits();
        if target.nrows() != dim || target.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: target.nrows() });
        }
        Self::assemble_gate(drift, controls, TargetKind::GatePure { target }, n_steps, t_max)
    }

    fn assemble_gate(
        drift: &PauliSum,
        controls: &[(PauliSum, PulseAnsatz)],
        kind: TargetKind,
        n_steps: usize,
        t_max: f64,
    ) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if !(t_max > 0.0) {
            return Err(Error::Config(format!("T_max must be positive, got {t_max}")));
        }
        let hams: Vec<PauliSum> = controls.iter().map(|(h, _)| h.clone()).collect();
        let stepper = Stepper::new(drift, &hams)?;
        let templates: Vec<PulseAnsatz> = controls.iter().map(|(_, p)| p.clone()).collect();
        let n_parameters = templates.iter().map(|p| p.n_coefficients()).sum();
        Ok(Self { stepper, templates, n_parameters, n_steps, t_max, kind })
    }

    /// Total flat coefficient count across all controls.
    pub fn n_parameters(&self) -> usize {
        self.n_parameters
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Coefficient box for the local optimizer.
    pub fn alpha_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-ALPHA_BOUND, ALPHA_BOUND); self.n_parameters]
    }

    /// Ansatz objects with the flat coefficient vector split per control.
    pub fn pulses_with(&self, alphas: &[f64]) -> Result<Vec<PulseAnsatz>> {
        if alphas.len() != self.n_parameters {
            return Err(Error::Dimension { expected: self.n_parameters, got: alphas.len() });
        }
        let mut out = Vec::with_capacity(self.templates.len());
        let mut offset = 0;
        for template in &self.templates {
            let k = template.n_coefficients();
            out.push(template.with_alphas(alphas[offset..offset + k].to_vec())?);
            offset += k;
        }
        Ok(out)
    }

    /// Infidelity of the evolution over [0, t] driven by `alphas`.
    /// t = 0 scores the identity evolution.
    pub fn infidelity(&self, t: f64, alphas: &[f64]) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Config(format!("negative gate time {t}")));
        }
        let pulses = self.pulses_with(alphas)?;
        let fidelity = match &self.kind {
            TargetKind::Pure { initial, target } => {
                let psi = if t == 0.0 {
                    initial.clone()
                } else {
                    self.stepper.evolve_state(t, &pulses, self.n_steps, initial)?
                };
                noiseless_fidelity(&psi, target)?
            }
            TargetKind::Observable { initial, obs } => {
                let psi = if t == 0.0 {
                    initial.clone()
                } else {
                    self.stepper.evolve_state(t, &pulses, self.n_steps, initial)?
                };
                obs.evaluate(&psi, t)?
            }
            TargetKind::Gate { obs } => {
                let u = if t == 0.0 {
                    DMatrix::identity(self.stepper.dim(), self.stepper.dim())
                } else {
                    self.stepper.evolve_unitary(t, &pulses, self.n_steps)?
                };
                obs.evaluate(&u, t)?
            }
            TargetKind::GatePure { target } => {
                let u = if t == 0.0 {
                    DMatrix::identity(self.stepper.dim(), self.stepper.dim())
                } else {
                    self.stepper.evolve_unitary(t, &pulses, self.n_steps)?
                };
                let tr: C64 = (target.adjoint() * u).trace();
                tr.norm_sqr() / (target.nrows() as f64).powi(2)
            }
        };
        Ok((1.0 - fidelity).clamp(0.0, 1.0))
    }
}

/// Local coefficient optimization at fixed gate time.
pub fn crab_optimize(
    evaluator: &CrabEvaluator,
    t: f64,
    alpha0: &[f64],
    config: &LocalConfig,
) -> Result<OptimizationOutcome> {
    let bounds = Bounds::new(&evaluator.alpha_bounds())?;
    let mut func = |alphas: &[f64]| evaluator.infidelity(t, alphas);
    let r = local_optimize(&mut func, alpha0, &bounds, config)?;
    Ok(OptimizationOutcome {
        t_opt: t,
        alpha_opt: r.x.as_slice().to_vec(),
        infidelity: r.f,
        n_fun_evals: r.n_fun_evals,
        trace: r.trace,
        converged_reason: r.reason.into(),
    })
}

/// Coefficient optimization from an all-zero start.
pub fn crab_optimize_cold(
    evaluator: &CrabEvaluator,
    t: f64,
    config: &LocalConfig,
) -> Result<OptimizationOutcome> {
    crab_optimize(evaluator, t, &vec![0.0; evaluator.n_parameters()], config)
}

/// Basin-hopping hyper-parameters.
#[derive(Clone, Debug)]
pub struct BasinHoppingConfig {
    /// Outer displacement iterations after the initial local solve.
    pub n_iterations: usize,
    /// Displacement half-width in units of each coordinate's scale.
    pub step_size: f64,
    /// Metropolis temperature.
    pub temperature: f64,
}

impl Default for BasinHoppingConfig {
    fn default() -> Self {
        Self { n_iterations: 10, step_size: 0.5, temperature: 1.0 }
    }
}

/// Joint (T, coefficients) global search: a fixed-time solve at t_init,
/// then a joint local solve, then Metropolis-accepted uniform displacements
/// within ±step_size in every coordinate (T included) with a fresh joint
/// local solve each. Hops must cover the spacing between fidelity basins
/// along T, so T is displaced on the same scale as the coefficients.
///
/// The returned best is never worse than the fixed-time solve at t_init
/// (which `warm` can supply to avoid recomputation). Ties prefer smaller T.
/// Deterministic for a fixed (seed, t_init).
pub fn tcrab_basinhopping(
    evaluator: &CrabEvaluator,
    t_init: f64,
    seed: u64,
    local: &LocalConfig,
    bh: &BasinHoppingConfig,
    warm: Option<&OptimizationOutcome>,
) -> Result<OptimizationOutcome> {
    if !(0.0..=evaluator.t_max()).contains(&t_init) {
        return Err(Error::Config(format!(
            "t_init {t_init} outside [0, {}]",
            evaluator.t_max()
        )));
    }
    let n_alpha = evaluator.n_parameters();
    let mut intervals = Vec::with_capacity(n_alpha + 1);
    intervals.push((0.0, evaluator.t_max()));
    intervals.extend_from_slice(&evaluator.alpha_bounds());
    let bounds = Bounds::new(&intervals)?;

    let mut total_evals = 0usize;
    let seeded = match warm {
        Some(w) => {
            if w.alpha_opt.len() != n_alpha {
                return Err(Error::Dimension { expected: n_alpha, got: w.alpha_opt.len() });
            }
            w.clone()
        }
        None => {
            let w = crab_optimize_cold(evaluator, t_init, local)?;
            total_evals += w.n_fun_evals;
            w
        }
    };

    let mut func = |x: &[f64]| evaluator.infidelity(x[0], &x[1..]);
    let joint = |out: &OptimizationOutcome| {
        let mut x = Vec::with_capacity(n_alpha + 1);
        x.push(out.t_opt);
        x.extend_from_slice(&out.alpha_opt);
        x
    };
    let outcome = |r: &LocalResult| OptimizationOutcome {
        t_opt: r.x[0],
        alpha_opt: r.x.as_slice()[1..].to_vec(),
        infidelity: r.f,
        n_fun_evals: r.n_fun_evals,
        trace: Vec::new(),
        converged_reason: r.reason.into(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r0 = local_optimize(&mut func, &joint(&seeded), &bounds, local)?;
    total_evals += r0.n_fun_evals;
    let first = outcome(&r0);
    // best-seen includes the seeding fixed-time solve
    let mut best = if first.infidelity < seeded.infidelity
        || (first.infidelity == seeded.infidelity && first.t_opt < seeded.t_opt)
    {
        first.clone()
    } else {
        seeded
    };
    let mut current = first;
    let mut trace = vec![(0usize, best.infidelity)];

    for iteration in 1..=bh.n_iterations {
        let mut x_trial = joint(&current);
        for (j, v) in x_trial.iter_mut().enumerate() {
            let u: f64 = rng.random_range(-1.0..1.0);
            *v = (*v + u * bh.step_size).clamp(bounds.lower()[j], bounds.upper()[j]);
        }
        let r = local_optimize(&mut func, &x_trial, &bounds, local)?;
        total_evals += r.n_fun_evals;
        let candidate = outcome(&r);

        // Metropolis on the accepted-chain value; the uniform draw always
        // advances the stream so acceptance history cannot desynchronize it
        let w = if candidate.infidelity <= current.infidelity {
            1.0
        } else if bh.temperature > 0.0 {
            ((current.infidelity - candidate.infidelity) / bh.temperature).exp()
        } else {
            0.0
        };
        let accept = w >= rng.random::<f64>();
        if candidate.infidelity < best.infidelity
            || (candidate.infidelity == best.infidelity && candidate.t_opt < best.t_opt)
        {
            best = candidate.clone();
        }
        if accept {
            current = candidate;
        }
        trace.push((iteration, best.infidelity));
    }

    Ok(OptimizationOutcome {
        t_opt: best.t_opt,
        alpha_opt: best.alpha_opt,
        infidelity: best.infidelity,
        n_fun_evals: total_evals,
        trace,
        converged_reason: ConvergedReason::IterationsComplete,
    })
}

/// Bisection hyper-parameters over the gate-time axis.
#[derive(Clone, Debug)]
pub struct BisectionConfig {
    /// Search interval for T.
    pub t_lo: f64,
    pub t_hi: f64,
    /// Forward-difference step for dI/dT.
    pub fd_step_t: f64,
    /// Stop when |dI/dT| at the midpoint falls below this.
    pub tol_derivative: f64,
    /// Stop when the bracket is narrower than this.
    pub tol_interval: f64,
    /// Warm-start each profile solve from the nearest previously sampled T.
    pub warm_start: bool,
}

impl BisectionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.t_lo >= 0.0 && self.t_hi > self.t_lo) {
            return Err(Error::Config(format!(
                "bad bisection interval [{}, {}]",
                self.t_lo, self.t_hi
            )));
        }
        if !(self.fd_step_t > 0.0) || self.fd_step_t >= self.t_hi - self.t_lo {
            return Err(Error::Config(format!(
                "fd_step_t {} must be positive and smaller than the interval",
                self.fd_step_t
            )));
        }
        if !(self.tol_derivative > 0.0) || !(self.tol_interval > 0.0) {
            return Err(Error::Config("bisection tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Locally optimal infidelity profile I(T) with nearest-T warm starts.
struct Profile<'a> {
    evaluator: &'a CrabEvaluator,
    local: &'a LocalConfig,
    warm_start: bool,
    /// (T, optimal coefficients, infidelity) for every solve, in order.
    samples: Vec<(f64, Vec<f64>, f64)>,
    trace: Vec<(usize, f64)>,
}

impl Profile<'_> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        let x0 = if self.warm_start {
            self.samples
                .iter()
                .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
                .map(|s| s.1.clone())
                .unwrap_or_else(|| vec![0.0; self.evaluator.n_parameters()])
        } else {
            vec![0.0; self.evaluator.n_parameters()]
        };
        let out = crab_optimize(self.evaluator, t, &x0, self.local)?;
        self.trace.push((self.samples.len() + 1, out.infidelity));
        self.samples.push((t, out.alpha_opt, out.infidelity));
        Ok(out.infidelity)
    }

    /// Forward difference; evaluates t first so t + h warm-starts from it.
    fn derivative(&mut self, t: f64, h: f64) -> Result<f64> {
        let f0 = self.eval(t)?;
        let f1 = self.eval(t + h)?;
        Ok((f1 - f0) / h)
    }

    fn sample_at(&self, t: f64) -> Option<&(f64, Vec<f64>, f64)> {
        self.samples.iter().rev().find(|s| s.0 == t)
    }

    fn outcome_at(&self, t: f64, reason: ConvergedReason) -> Result<OptimizationOutcome> {
        let (_, alphas, infid) = self
            .sample_at(t)
            .ok_or_else(|| Error::Numerical(format!("no profile sample at T = {t}")))?;
        Ok(OptimizationOutcome {
            t_opt: t,
            alpha_opt: alphas.clone(),
            infidelity: *infid,
            n_fun_evals: self.samples.len(),
            trace: self.trace.clone(),
            converged_reason: reason,
        })
    }
}

/// Locate a sign change of dI/dT by bisection, where I(T) is the locally
/// optimal infidelity at gate time T. Each profile evaluation is a full
/// coefficient solve; `n_fun_evals` on the outcome counts those solves.
/// When both endpoint derivatives share a sign the better endpoint comes
/// back flagged [`ConvergedReason::NoBracketedExtremum`].
pub fn tcrab_bisection(
    evaluator: &CrabEvaluator,
    config: &BisectionConfig,
    local: &LocalConfig,
) -> Result<OptimizationOutcome> {
    config.validate()?;
    let h = config.fd_step_t;
    let mut profile = Profile {
        evaluator,
        local,
        warm_start: config.warm_start,
        samples: Vec::new(),
        trace: Vec::new(),
    };
    let (mut a, mut b) = (config.t_lo, config.t_hi);
    // derivative at t_hi is probed backward to stay inside the interval
    let mut da = profile.derivative(a, h)?;
    let db = profile.derivative(b - h, h)?;
    if da.signum() == db.signum() {
        let fa = profile.sample_at(a).map(|s| s.2).unwrap_or(f64::INFINITY);
        let fb = profile.sample_at(b - h).map(|s| s.2).unwrap_or(f64::INFINITY);
        let t_pick = if fa <= fb { a } else { b - h };
        return profile.outcome_at(t_pick, ConvergedReason::NoBracketedExtremum);
    }
    loop {
        let mid = 0.5 * (a + b);
        let dm = profile.derivative(mid, h)?;
        if dm.abs() < config.tol_derivative {
            return profile.outcome_at(mid, ConvergedReason::DerivativeTolerance);
        }
        if dm.signum() == da.signum() {
            a = mid;
            da = dm;
        } else {
            b = mid;
        }
        if b - a < config.tol_interval {
            return profile.outcome_at(mid, ConvergedReason::IntervalTolerance);
        }
    }
}
