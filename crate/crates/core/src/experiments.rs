//! Named benchmark systems and their noiseless identity variants.
//!
//! Each builder fixes a drift Hamiltonian, a control Hamiltonian, a target
//! (state or gate), and a noise model; the harness supplies frequencies,
//! seeds, and optimizer settings. Frequencies are drawn once per experiment
//! and shared across every run so that runs differ only in their starting
//! point, never in the ansatz itself.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{draw_frequencies, FrequencyMode, PulseAnsatz};
use crate::choi::{cz_gate, lift_problem, GateObservable, QubitLayout};
use crate::fidelity::{NoisyTargetObservable, DEFAULT_TRUNCATION_THRESHOLD};
use crate::noise::NoiseModel;
use crate::optimize::{crab_optimize, CrabEvaluator, LocalConfig};
use crate::pauli::{PauliString, PauliSum};
use crate::propagate::{ControlProblem, DEFAULT_N_STEPS};
use crate::{C64, Error, Result};

/// Number of points in the standard time sweep.
pub const SWEEP_POINTS: usize = 100;
/// Upper edge of the standard time sweep, also the default bound on T.
pub const SWEEP_T_MAX: f64 = 10.0;
/// Default band edge for uniform-band frequency draws.
pub const DEFAULT_OMEGA_MAX: f64 = 20.0;

/// The four shipped benchmark systems.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Bell-state generation on two capacitively coupled charge qubits.
    Josephson,
    /// Paramagnetic-to-ferromagnetic ground-state transfer on a
    /// Lipkin-Meshkov-Glick chain.
    Lmg,
    /// CZ compilation on exchange-coupled spin qubits (SWAP control).
    SpinCzSwap,
    /// CZ compilation on dipole-coupled spin qubits (ZZ control).
    SpinCzDipole,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Josephson,
        ExperimentKind::Lmg,
        ExperimentKind::SpinCzSwap,
        ExperimentKind::SpinCzDipole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Josephson => "josephson",
            ExperimentKind::Lmg => "lmg",
            ExperimentKind::SpinCzSwap => "spin_cz_swap",
            ExperimentKind::SpinCzDipole => "spin_cz_dipole",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment {name:?}")))
    }

    /// The noise model each system was published with.
    pub fn default_noise(self) -> NoiseModel {
        match self {
            ExperimentKind::Josephson | ExperimentKind::Lmg => {
                NoiseModel::Depolarizing { rate: 0.01 }
            }
            ExperimentKind::SpinCzSwap => NoiseModel::LocalDephasing { rate: 0.05 },
            ExperimentKind::SpinCzDipole => NoiseModel::DipoleDipole { rate: 0.03 },
        }
    }

    /// The basis size each system was published with.
    pub fn default_m(self) -> usize {
        match self {
            ExperimentKind::Lmg => 10,
            _ => 8,
        }
    }

    /// The experiment with its published parameter set.
    pub fn default_experiment(self) -> Result<Experiment> {
        let noise = self.default_noise();
        let m = self.default_m();
        match self {
            ExperimentKind::Josephson => josephson_problem(1.0, -1.0, noise, m),
            ExperimentKind::Lmg => lmg_problem(3, 1.0, 0.0, noise, m),
            ExperimentKind::SpinCzSwap => spin_cz_swap_problem(1.5, 0.5, noise, m),
            ExperimentKind::SpinCzDipole => spin_cz_dipole_problem(1.0, 1.0, noise, m),
        }
    }
}

/// What the controls are steering toward.
#[derive(Clone, Debug)]
enum TargetSpec {
    StateTransfer { initial: DVector<C64>, target: DVector<C64> },
    GateCompile { gate: DMatrix<C64>, layout: QubitLayout },
}

/// A fully specified benchmark system, minus frequencies and seeds.
#[derive(Clone, Debug)]
pub struct Experiment {
    kind: ExperimentKind,
    drift: PauliSum,
    control_hs: Vec<PauliSum>,
    target: TargetSpec,
    noise: NoiseModel,
    m: usize,
    omega_mode: FrequencyMode,
    omega_scale: f64,
    n_steps: usize,
    t_max: f64,
    /// Permit the uniform-decay objective even when the commutation
    /// certificate fails. Set only by builders whose published results rest
    /// on that approximation.
    assume_commuting: bool,
}

fn basis_state(dim: usize, index: usize) -> DVector<C64> {
    DVector::from_fn(dim, |i, _| {
        if i == index { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
    })
}

/// Uniform superposition of the even-parity computational states:
/// (|+>^n + |->^n)/sqrt(2), the symmetric ferromagnetic ground-state
/// combination reachable from |0...0>.
fn even_parity_superposition(n: usize) -> DVector<C64> {
    let dim = 1usize << n;
    let amp = 1.0 / ((dim / 2) as f64).sqrt();
    DVector::from_fn(dim, |i, _| {
        if (i as u32).count_ones() % 2 == 0 {
            C64::new(amp, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn two_site_label(n: usize, i: usize, j: usize, p: char) -> String {
    let mut chars = vec!['I'; n];
    chars[i] = p;
    chars[j] = p;
    chars.into_iter().collect()
}

fn check_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite, got {value}")))
    }
}

/// Two charge qubits with always-on tunneling and charge bias,
/// H_0 = sum_i (e_c Z_i + e_j X_i), controlled through their capacitive
/// coupling Z1 Z2. Steers |00> to the Bell state (|00> + |11>)/sqrt(2).
pub fn josephson_problem(
    e_j: f64,
    e_c: f64,
    noise: NoiseModel,
    m: usize,
) -> Result<Experiment> {
    check_finite("E_J", e_j)?;
    check_finite("E_C", e_c)?;
    let drift = PauliSum::from_labels(&[
        (e_c, "ZI"),
        (e_c, "IZ"),
        (e_j, "XI"),
        (e_j, "IX"),
    ])?;
    let control = PauliSum::from_labels(&[(1.0, "ZZ")])?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut target = DVector::zeros(4);
    target[0] = C64::new(s, 0.0);
    target[3] = C64::new(s, 0.0);
    Experiment::assemble(
        ExperimentKind::Josephson,
        drift,
        vec![control],
        TargetSpec::StateTransfer { initial: basis_state(4, 0), target },
        noise,
        m,
        false,
    )
}

/// Lipkin-Meshkov-Glick chain of n spins (2 <= n <= 4) with all-to-all
/// ferromagnetic coupling, H_0 = -(J/n) sum_{i<j} (X_i X_j + g Y_i Y_j),
/// controlled through a transverse field -sum_i Z_i. Steers the
/// paramagnetic ground state |0...0> to the symmetric ferromagnetic
/// superposition.
pub fn lmg_problem(
    n: usize,
    coupling: f64,
    anisotropy: f64,
    noise: NoiseModel,
    m: usize,
) -> Result<Experiment> {
    if !(2..=4).contains(&n) {
        return Err(Error::Config(format!(
            "supported chain lengths are 2 through 4, got {n}"
        )));
    }
    check_finite("coupling", coupling)?;
    check_finite("anisotropy", anisotropy)?;
    let mut drift = PauliSum::new(n)?;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = -coupling / n as f64;
            drift.add(w, PauliString::parse(&two_site_label(n, i, j, 'X'))?)?;
            if anisotropy != 0.0 {
                drift.add(
                    w * anisotropy,
                    PauliString::parse(&two_site_label(n, i, j, 'Y'))?,
                )?;
            }
        }
    }
    let mut control = PauliSum::new(n)?;
    for i in 0..n {
        let mut chars = vec!['I'; n];
        chars[i] = 'Z';
        let label: String = chars.into_iter().collect();
        control.add(-1.0, PauliString::parse(&label)?)?;
    }
    Experiment::assemble(
        ExperimentKind::Lmg,
        drift,
        vec![control],
        TargetSpec::StateTransfer {
            initial: basis_state(1 << n, 0),
            target: even_parity_superposition(n),
        },
        noise,
        m,
        false,
    )
}

fn spin_drift(delta_e1: f64, delta_e2: f64) -> Result<PauliSum> {
    check_finite("delta_E1", delta_e1)?;
    check_finite("delta_E2", delta_e2)?;
    PauliSum::from_labels(&[(0.5 * delta_e1, "ZI"), (0.5 * delta_e2, "IZ")])
}

/// Exchange-coupled spin qubits: drift (dE1 Z1 + dE2 Z2)/2, control SWAP/2,
/// compiling a CZ gate. Local dephasing does not commute with the exchange
/// terms, so the published objective is the uniform-decay approximation;
/// the builder opts in to it explicitly.
pub fn spin_cz_swap_problem(
    delta_e1: f64,
    delta_e2: f64,
    noise: NoiseModel,
    m: usize,
) -> Result<Experiment> {
    let drift = spin_drift(delta_e1, delta_e2)?;
    let control = PauliSum::from_labels(&[
        (0.25, "II"),
        (0.25, "XX"),
        (0.25, "YY"),
        (0.25, "ZZ"),
    ])?;
    Experiment::assemble(
        ExperimentKind::SpinCzSwap,
        drift,
        vec![control],
        TargetSpec::GateCompile { gate: cz_gate(), layout: QubitLayout::Block },
        noise,
        m,
        true,
    )
}

/// Dipole-coupled spin qubits: drift (dE1 Z1 + dE2 Z2)/2, control Z1 Z2 / 2,
/// compiling a CZ gate. Everything is diagonal, so the collective-dephasing
/// noise commutes exactly.
pub fn spin_cz_dipole_problem(
    delta_e1: f64,
    delta_e2: f64,
    noise: NoiseModel,
    m: usize,
) -> Result<Experiment> {
    let drift = spin_drift(delta_e1, delta_e2)?;
    let control = PauliSum::from_labels(&[(0.5, "ZZ")])?;
    Experiment::assemble(
        ExperimentKind::SpinCzDipole,
        drift,
        vec![control],
        TargetSpec::GateCompile { gate: cz_gate(), layout: QubitLayout::Block },
        noise,
        m,
        false,
    )
}

impl Experiment {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: ExperimentKind,
        drift: PauliSum,
        control_hs: Vec<PauliSum>,
        target: TargetSpec,
        noise: NoiseModel,
        m: usize,
        assume_commuting: bool,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("basis size M must be at least 1".into()));
        }
        Ok(Self {
            kind,
            drift,
            control_hs,
            target,
            noise,
            m,
            omega_mode: FrequencyMode::UniformBand,
            omega_scale: DEFAULT_OMEGA_MAX,
            n_steps: DEFAULT_N_STEPS,
            t_max: SWEEP_T_MAX,
            assume_commuting,
        })
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind
    }

    pub fn n_logical(&self) -> usize {
        self.drift.n_qubits()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn drift(&self) -> &PauliSum {
        &self.drift
    }

    pub fn controls(&self) -> &[PauliSum] {
        &self.control_hs
    }

    pub fn is_gate(&self) -> bool {
        matches!(self.target, TargetSpec::GateCompile { .. })
    }

    /// Replace the frequency-draw mode and its scale (band edge or period).
    pub fn with_ansatz(mut self, mode: FrequencyMode, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Config(format!(
                "frequency scale must be positive, got {scale}"
            )));
        }
        self.omega_mode = mode;
        self.omega_scale = scale;
        Ok(self)
    }

    /// Replace the propagation resolution and the bound on T.
    pub fn with_sweep(mut self, n_steps: usize, t_max: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if !(t_max > 0.0) {
            return Err(Error::Config(format!("T_max must be positive, got {t_max}")));
        }
        self.n_steps = n_steps;
        self.t_max = t_max;
        Ok(self)
    }

    /// Bypass the commutation gate on [`Self::evaluator`]. Verification
    /// tooling uses this to measure the approximation gap of an uncertified
    /// objective instead of refusing to build it.
    pub(crate) fn force_assume_commuting(&mut self) {
        self.assume_commuting = true;
    }

    /// Draw one zeroed pulse template per control. Call once per experiment;
    /// every run then shares the same frequencies.
    pub fn draw_templates(&self, rng: &mut impl Rng) -> Result<Vec<PulseAnsatz>> {
        self.control_hs
            .iter()
            .map(|_| {
                let omegas =
                    draw_frequencies(self.omega_mode, self.m, self.omega_scale, rng)?;
                PulseAnsatz::zeroed(omegas)
            })
            .collect()
    }

    /// The frequency draw every consumer of `master_seed` shares: same seed,
    /// same templates, whether the caller is the sweep harness, the oracle
    /// cross-check, or an interactive session.
    pub fn seeded_templates(&self, master_seed: u64) -> Result<Vec<PulseAnsatz>> {
        use rand::SeedableRng as _;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(master_seed);
        self.draw_templates(&mut rng)
    }

    fn controls_with(&self, templates: &[PulseAnsatz]) -> Result<Vec<(PauliSum, PulseAnsatz)>> {
        if templates.len() != self.control_hs.len() {
            return Err(Error::Dimension {
                expected: self.control_hs.len(),
                got: templates.len(),
            });
        }
        for t in templates {
            if t.m() != self.m {
                return Err(Error::Dimension { expected: self.m, got: t.m() });
            }
        }
        Ok(self
            .control_hs
            .iter()
            .zip(templates)
            .map(|(h, t)| (h.clone(), t.clone()))
            .collect())
    }

    /// The state-transfer problem this experiment optimizes: the problem
    /// itself for state targets, the doubled-register lift for gate targets.
    /// This is what the master-equation oracle integrates.
    pub fn state_problem(&self, templates: &[PulseAnsatz]) -> Result<ControlProblem> {
        let controls = self.controls_with(templates)?;
        match &self.target {
            TargetSpec::StateTransfer { initial, target } => ControlProblem::new(
                self.drift.clone(),
                controls,
                initial.clone(),
                target.clone(),
                self.noise.clone(),
                self.n_steps,
                self.t_max,
            ),
            TargetSpec::GateCompile { gate, layout } => lift_problem(
                &self.drift,
                &controls,
                gate,
                &self.noise,
                self.n_steps,
                self.t_max,
                *layout,
            ),
        }
    }

    /// The fast objective. Gate targets propagate only the logical unitary;
    /// state targets propagate the state itself.
    pub fn evaluator(&self, templates: &[PulseAnsatz]) -> Result<CrabEvaluator> {
        let controls = self.controls_with(templates)?;
        match &self.target {
            TargetSpec::StateTransfer { .. } => {
                let problem = self.state_problem(templates)?;
                if self.assume_commuting {
                    log::warn!(
                        "{}: skipping the commutation certificate; the objective \
                         is the uniform-decay approximation",
                        self.kind.name()
                    );
                    CrabEvaluator::for_problem_assume_commuting(&problem)
                } else {
                    CrabEvaluator::for_problem(&problem)
                }
            }
            TargetSpec::GateCompile { gate, layout } => {
                if self.noise.is_noiseless() {
                    return CrabEvaluator::for_gate_pure(
                        &self.drift,
                        &controls,
                        gate.clone(),
                        self.n_steps,
                        self.t_max,
                    );
                }
                let lifted = self.state_problem(templates)?;
                let spectrum = lifted.noise.spectrum(lifted.n_qubits())?;
                let cert = lifted.certify()?;
                let obs = if cert.commutes() {
                    NoisyTargetObservable::new(
                        &lifted.target_state,
                        &spectrum,
                        &cert,
                        DEFAULT_TRUNCATION_THRESHOLD,
                    )?
                } else if self.assume_commuting {
                    log::warn!(
                        "{}: noise does not commute with the control terms; the \
                         objective is the uniform-decay approximation",
                        self.kind.name()
                    );
                    NoisyTargetObservable::assume_commuting(
                        &lifted.target_state,
                        &spectrum,
                        DEFAULT_TRUNCATION_THRESHOLD,
                    )?
                } else {
                    return Err(Error::Contract(format!(
                        "{}: noise fails the commutation certificate",
                        self.kind.name()
                    )));
                };
                let gate_obs = GateObservable::from_lifted(&obs, *layout)?;
                CrabEvaluator::for_gate(
                    &self.drift,
                    &controls,
                    gate_obs,
                    self.n_steps,
                    self.t_max,
                )
            }
        }
    }

    /// The noiseless do-nothing variant: same drift, controls, and ansatz,
    /// but the target is the initial state (or the identity gate). Whether
    /// its optimized infidelity stays flat at zero across T tells whether
    /// the controls can cancel the drift at that T.
    pub fn identity_variant(&self) -> Self {
        let mut out = self.clone();
        out.noise = NoiseModel::Noiseless;
        out.target = match &self.target {
            TargetSpec::StateTransfer { initial, .. } => TargetSpec::StateTransfer {
                initial: initial.clone(),
                target: initial.clone(),
            },
            TargetSpec::GateCompile { gate, layout } => TargetSpec::GateCompile {
                gate: DMatrix::identity(gate.nrows(), gate.ncols()),
                layout: *layout,
            },
        };
        out
    }
}

/// One optimized point of an identity-variant sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityPoint {
    pub t: f64,
    pub infidelity: f64,
    pub n_fun_evals: usize,
}

/// Optimize the identity variant of `experiment` at every grid time.
/// With `warm_start` each point starts from the previous point's solution,
/// otherwise every point starts cold from zero coefficients.
pub fn identity_test(
    experiment: &Experiment,
    grid: &[f64],
    templates: &[PulseAnsatz],
    local: &LocalConfig,
    warm_start: bool,
) -> Result<Vec<IdentityPoint>> {
    let variant = experiment.identity_variant();
    let evaluator = variant.evaluator(templates)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut prev: Option<Vec<f64>> = None;
    for &t in grid {
        let x0 = match (&prev, warm_start) {
            (Some(alpha), true) => alpha.clone(),
            _ => vec![0.0; evaluator.n_parameters()],
        };
        let run = crab_optimize(&evaluator, t, &x0, local)?;
        out.push(IdentityPoint { t, infidelity: run.infidelity, n_fun_evals: run.n_fun_evals });
        prev = Some(run.alpha_opt);
    }
    Ok(out)
}

/// The standard initial-time grid: n equally spaced points ending at t_max,
/// starting one spacing above zero.
pub fn sweep_grid(n_points: usize, t_max: f64) -> Result<Vec<f64>> {
    if n_points == 0 {
        return Err(Error::Config("the sweep needs at least one point".into()));
    }
    if !(t_max > 0.0) {
        return Err(Error::Config(format!("T_max must be positive, got {t_max}")));
    }
    Ok((0..n_points)
        .map(|i| t_max * (i + 1) as f64 / n_points as f64)
        .collect())
}
