//! Piecewise-constant Schroedinger propagation.
//!
//! Time is split into N_t equal steps; pulses are sampled at step midpoints
//! and each step applies exp(-i H(t_s) dt) of the full instantaneous
//! Hamiltonian (no drift/control splitting). The stepper classifies the
//! operator structure once so diagonal and real-symmetric problems skip
//! complex eigendecompositions in the hot loop.

use nalgebra::{DMatrix, DVector};

use crate::ansatz::PulseAnsatz;
use crate::noise::{certify_commutation, CommutationCertificate, NoiseModel};
use crate::pauli::{PauliString, PauliSum};
use crate::{C64, Error, Result};

/// Default number of time steps.
pub const DEFAULT_N_STEPS: usize = 300;

/// A state-transfer problem: drift plus pulsed controls, endpoints, noise.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub drift: PauliSum,
    pub controls: Vec<(PauliSum, PulseAnsatz)>,
    pub initial_state: DVector<C64>,
    pub target_state: DVector<C64>,
    pub noise: NoiseModel,
    pub n_steps: usize,
    pub t_max: f64,
}

impl ControlProblem {
    pub fn new(
        drift: PauliSum,
        controls: Vec<(PauliSum, PulseAnsatz)>,
        initial_state: DVector<C64>,
        target_state: DVector<C64>,
        noise: NoiseModel,
        n_steps: usize,
        t_max: f64,
    ) -> Result<Self> {
        let n = drift.n_qubits();
        let dim = 1usize << n;
        for (h, _) in &controls {
            if h.n_qubits() != n {
                return Err(Error::Dimension { expected: n, got: h.n_qubits() });
            }
        }
        for (name, state) in [("initial", &initial_state), ("target", &target_state)] {
            if state.len() != dim {
                return Err(Error::Dimension { expected: dim, got: state.len() });
            }
            if (state.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "{name} state norm {} is not 1",
                    state.norm()
                )));
            }
        }
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if !(t_max > 0.0) {
            return Err(Error::Config(format!("T_max must be positive, got {t_max}")));
        }
        Ok(Self { drift, controls, initial_state, target_state, noise, n_steps, t_max })
    }

    pub fn n_qubits(&self) -> usize {
        self.drift.n_qubits()
    }

    /// Unique Pauli strings pooled from the drift and every control.
    pub fn hamiltonian_terms(&self) -> Vec<PauliString> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let all = self
            .drift
            .terms()
            .iter()
            .chain(self.controls.iter().flat_map(|(h, _)| h.terms().iter()));
        for (_, p) in all {
            if seen.insert(p.index()) {
                out.push(*p);
            }
        }
        out
    }

    /// Commutation certificate of the problem's noise against its pooled
    /// Hamiltonian terms.
    pub fn certify(&self) -> Result<CommutationCertificate> {
        certify_commutation(&self.hamiltonian_terms(), &self.noise, self.n_qubits())
    }

    /// Current pulses (the ansatz objects stored on each control).
    pub fn pulses(&self) -> Vec<PulseAnsatz> {
        self.controls.iter().map(|(_, p)| p.clone()).collect()
    }
}

/// Structure class of the instantaneous Hamiltonian.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StepKind {
    /// I/Z terms only: exact elementwise phase factors.
    Diagonal,
    /// Real matrix (even Y count per term): real symmetric eigensolve.
    RealSymmetric,
    /// General complex Hermitian.
    Hermitian,
}

enum PathData {
    Diagonal { drift: DVector<f64>, controls: Vec<DVector<f64>> },
    RealSymmetric { drift: DMatrix<f64>, controls: Vec<DMatrix<f64>> },
    Hermitian { drift: DMatrix<C64>, controls: Vec<DMatrix<C64>> },
}

/// Precompiled stepping engine for one (drift, controls) operator set.
pub struct Stepper {
    dim: usize,
    data: PathData,
}

impl Stepper {
    pub fn new(drift: &PauliSum, controls: &[PauliSum]) -> Result<Self> {
        let all_diag = drift.is_diagonal() && controls.iter().all(|c| c.is_diagonal());
        let all_real = drift.is_real() && controls.iter().all(|c| c.is_real());
        let kind = if all_diag {
            StepKind::Diagonal
        } else if all_real {
            StepKind::RealSymmetric
        } else {
            StepKind::Hermitian
        };
        Self::with_kind(drift, controls, kind)
    }

    /// Force a specific path (must be compatible with the operators).
    pub fn with_kind(drift: &PauliSum, controls: &[PauliSum], kind: StepKind) -> Result<Self> {
        let n = drift.n_qubits();
        for c in controls {
            if c.n_qubits() != n {
                return Err(Error::Dimension { expected: n, got: c.n_qubits() });
            }
        }
        let data = match kind {
            StepKind::Diagonal => PathData::Diagonal {
                drift: drift.diagonal_real()?,
                controls: controls.iter().map(|c| c.diagonal_real()).collect::<Result<_>>()?,
            },
            StepKind::RealSymmetric => PathData::RealSymmetric {
                drift: drift.matrix_real()?,
                controls: controls.iter().map(|c| c.matrix_real()).collect::<Result<_>>()?,
            },
            StepKind::Hermitian => PathData::Hermitian {
                drift: drift.matrix(),
                controls: controls.iter().map(|c| c.matrix()).collect(),
            },
        };
        Ok(Self { dim: 1 << n, data })
    }

    pub fn kind(&self) -> StepKind {
        match self.data {
            PathData::Diagonal { .. } => StepKind::Diagonal,
            PathData::RealSymmetric { .. } => StepKind::RealSymmetric,
            PathData::Hermitian { .. } => StepKind::Hermitian,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn n_controls(&self) -> usize {
        match &self.data {
            PathData::Diagonal { controls, .. } => controls.len(),
            PathData::RealSymmetric { controls, .. } => controls.len(),
            PathData::Hermitian { controls, .. } => controls.len(),
        }
    }

    fn check_args(&self, t: f64, pulses: &[PulseAnsatz], n_steps: usize) -> Result<()> {
        if !(t > 0.0) {
            return Err(Error::Config(format!("evolution time must be positive, got {t}")));
        }
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if pulses.len() != self.n_controls() {
            return Err(Error::Dimension { expected: self.n_controls(), got: pulses.len() });
        }
        Ok(())
    }

    /// Evolve a state over [0, t] in n_steps midpoint-sampled steps.
    pub fn evolve_state(
        &self,
        t: f64,
        pulses: &[PulseAnsatz],
        n_steps: usize,
        psi0: &DVector<C64>,
    ) -> Result<DVector<C64>> {
        self.check_args(t, pulses, n_steps)?;
        if psi0.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: psi0.len() });
        }
        let dt = t / n_steps as f64;
        let mut psi = psi0.clone();
        let mut coeffs = vec![0.0f64; pulses.len()];
        match &self.data {
            PathData::Diagonal { drift, controls } => {
                // accumulate total phase per basis state, single rotation
                let mut phase = DVector::<f64>::zeros(self.dim);
                for s in 0..n_steps {
                    let ts = (s as f64 + 0.5) * dt;
                    for (c, p) in coeffs.iter_mut().zip(pulses) {
                        *c = p.value(ts);
                    }
                    for j in 0..self.dim {
                        let mut d = drift[j];
                        for (c, ctrl) in coeffs.iter().zip(controls) {
                            d += c * ctrl[j];
                        }
                        phase[j] -= d * dt;
                    }
                }
                for j in 0..self.dim {
                    psi[j] *= C64::from_polar(1.0, phase[j]);
                }
            }
            PathData::RealSymmetric { drift, controls } => {
                let mut h = drift.clone();
                for s in 0..n_steps {
                    let ts = (s as f64 + 0.5) * dt;
                    for (c, p) in coeffs.iter_mut().zip(pulses) {
                        *c = p.value(ts);
                    }
                    h.copy_from(drift);
                    for (c, ctrl) in coeffs.iter().zip(controls) {
                        h.zip_apply(ctrl, |hv, cv| *hv += c * cv);
                    }
                    let eig = h.clone().symmetric_eigen();
                    psi = apply_real_eigenstep(&eig.eigenvectors, &eig.eigenvalues, dt, &psi);
                }
            }
            PathData::Hermitian { drift, controls } => {
                let mut h = drift.clone();
                for s in 0..n_steps {
                    let ts = (s as f64 + 0.5) * dt;
                    for (c, p) in coeffs.iter_mut().zip(pulses) {
                        *c = p.value(ts);
                    }
                    h.copy_from(drift);
                    for (c, ctrl) in coeffs.iter().zip(controls) {
                        h.zip_apply(ctrl, |hv, cv| *hv += C64::from(*c) * cv);
                    }
                    let eig = h.clone().symmetric_eigen();
                    let y = eig.eigenvectors.adjoint() * &psi;
                    let mut z = y;
                    for j in 0..self.dim {
                        z[j] *= C64::from_polar(1.0, -eig.eigenvalues[j] * dt);
                    }
                    psi = &eig.eigenvectors * z;
                }
            }
        }
        let drift_norm = (psi.norm() - psi0.norm()).abs();
        if drift_norm > 1e-6 {
            return Err(Error::Numerical(format!("state norm drifted by {drift_norm}")));
        }
        Ok(psi)
    }

    /// Accumulate the full evolution operator over [0, t].
    pub fn evolve_unitary(
        &self,
        t: f64,
        pulses: &[PulseAnsatz],
        n_steps: usize,
    ) -> Result<DMatrix<C64>> {
        self.check_args(t, pulses, n_steps)?;
        let dt = t / n_steps as f64;
        let mut u = DMatrix::<C64>::identity(self.dim, self.dim);
        let mut coeffs = vec![0.0f64; pulses.len()];
        match &self.data {
            PathData::Diagonal { drift, controls } => {
                let mut phase = DVector::<f64>::zeros(self.dim);
                for s in 0..n_steps {
                    let ts = (s as f64 + 0.5) * dt;
                    for (c, p) in coeffs.iter_mut().zip(pulses) {
                        *c = p.value(ts);
                    }
                    for j in 0..self.dim {
                        let mut d = drift[j];
                        for (c, ctrl) in coeffs.iter().zip(controls) {
                            d += c * ctrl[j];
                        }
                        phase[j] -= d * dt;
                    }
                }
                for j in 0..self.dim {
                    u[(j, j)] = C64::from_polar(1.0, phase[j]);
                }
            }
            PathData::RealSymmetric { drift, controls } => {
                let mut h = drift.clone();
                for s in 0..n_steps {
                    let ts = (s as f64 + 0.5) * dt;
                    for (c, p) in coeffs.iter_mut().zip(pulses) {
                        *c = p.value(ts);
                    }
                    h.copy_from(drift);
                    for (c, ctrl) in coeffs.iter().zip(controls) {
                        h.zip_apply(ctrl, |hv, cv| *hv += c * cv);
                    }
                    let eig = h.clone().symmetric_eigen();
                    let step = real_eigenstep_matrix(&eig.eigenvectors, &eig.eigenvalues, dt);
                    u = step * u;
                }
            }
            PathData::Hermitian { drift, controls } => {
                let mut h = drift.clone();
                for s in 0..n_steps {
                    let ts = (s as f64 + 0.5) * dt;
                    for (c, p) in coeffs.iter_mut().zip(pulses) {
                        *c = p.value(ts);
                    }
                    h.copy_from(drift);
                    for (c, ctrl) in coeffs.iter().zip(controls) {
                        h.zip_apply(ctrl, |hv, cv| *hv += C64::from(*c) * cv);
                    }
                    u = crate::linalg::expm_hermitian(&h, C64::new(0.0, -dt)) * u;
                }
            }
        }
        let defect = (u.adjoint() * &u - DMatrix::<C64>::identity(self.dim, self.dim)).camax();
        if defect > 1e-6 {
            return Err(Error::Numerical(format!("propagator lost unitarity by {defect}")));
        }
        Ok(u)
    }
}

/// psi' = Q diag(exp(-i lambda dt)) Q^T psi with real Q, complex psi.
fn apply_real_eigenstep(
    q: &DMatrix<f64>,
    lambdas: &DVector<f64>,
    dt: f64,
    psi: &DVector<C64>,
) -> DVector<C64> {
    let re = psi.map(|e| e.re);
    let im = psi.map(|e| e.im);
    let mut y_re = q.transpose() * re;
    let mut y_im = q.transpose() * im;
    for j in 0..y_re.len() {
        let (s, c) = (-lambdas[j] * dt).sin_cos();
        let (a, b) = (y_re[j], y_im[j]);
        y_re[j] = c * a - s * b;
        y_im[j] = c * b + s * a;
    }
    let out_re = q * y_re;
    let out_im = q * y_im;
    DVector::from_fn(psi.len(), |j, _| C64::new(out_re[j], out_im[j]))
}

/// Q diag(exp(-i lambda dt)) Q^T as a complex matrix.
fn real_eigenstep_matrix(q: &DMatrix<f64>, lambdas: &DVector<f64>, dt: f64) -> DMatrix<C64> {
    let d = q.nrows();
    DMatrix::from_fn(d, d, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..d {
            acc += C64::from_polar(q[(a, j)] * q[(b, j)], -lambdas[j] * dt);
        }
        acc
    })
}

/// Evolve the problem's initial state with its stored pulses.
pub fn propagate(problem: &ControlProblem, t: f64) -> Result<DVector<C64>> {
    let sums: Vec<PauliSum> = problem.controls.iter().map(|(h, _)| h.clone()).collect();
    let stepper = Stepper::new(&problem.drift, &sums)?;
    let pulses = problem.pulses();
    stepper.evolve_state(t, &pulses, problem.n_steps, &problem.initial_state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ket(amps: &[(f64, f64)]) -> DVector<C64> {
        DVector::from_iterator(amps.len(), amps.iter().map(|&(r, i)| c(r, i)))
    }

    fn const_pulse(value: f64) -> PulseAnsatz {
        PulseAnsatz::new(vec![1.0], vec![value, 0.0, 0.0]).unwrap()
    }

    fn random_pulse(m: usize, amp: f64, rng: &mut impl Rng) -> PulseAnsatz {
        let omegas = (0..m).map(|_| rng.random_range(0.1..=20.0)).collect();
        let alphas = (0..2 * m + 1).map(|_| rng.random_range(-amp..=amp)).collect();
        PulseAnsatz::new(omegas, alphas).unwrap()
    }

    fn random_state(dim: usize, rng: &mut impl Rng) -> DVector<C64> {
        let v = DVector::from_fn(dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let n = v.norm();
        v / C64::from(n)
    }

    #[test]
    fn zero_hamiltonian_is_identity_evolution() {
        let drift = PauliSum::new(2).unwrap();
        let stepper = Stepper::new(&drift, &[]).unwrap();
        let psi0 = ket(&[(0.5, 0.0), (0.5, 0.0), (0.5, 0.0), (0.5, 0.0)]);
        let out = stepper.evolve_state(3.0, &[], 10, &psi0).unwrap();
        assert!((out - psi0).camax() < 1e-15);
    }

    #[test]
    fn z_rotation_closed_form() {
        // e^{-iZT}|+>: relative phase e^{2iT}; T=pi/2 lands on |->,
        // T=3pi/4 lands on |-_y>.
        let drift = PauliSum::from_labels(&[(1.0, "Z")]).unwrap();
        let stepper = Stepper::new(&drift, &[]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ket(&[(s, 0.0), (s, 0.0)]);
        let minus = ket(&[(s, 0.0), (-s, 0.0)]);
        let minus_y = ket(&[(s, 0.0), (0.0, -s)]);

        let at_half_pi = stepper
            .evolve_state(std::f64::consts::FRAC_PI_2, &[], 300, &plus)
            .unwrap();
        let overlap = minus.dotc(&at_half_pi).norm_sqr();
        assert!((overlap - 1.0).abs() < 1e-8, "overlap with |-> was {overlap}");

        let at_3pi4 = stepper
            .evolve_state(3.0 * std::f64::consts::FRAC_PI_4, &[], 300, &plus)
            .unwrap();
        let overlap_y = minus_y.dotc(&at_3pi4).norm_sqr();
        assert!((overlap_y - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_drift_matches_dense_exponential() {
        // transmon-style drift at E_J = 1, E_C = -1, no control pulse
        let drift = PauliSum::from_labels(&[
            (-1.0, "ZI"),
            (-1.0, "IZ"),
            (1.0, "XI"),
            (1.0, "IX"),
        ])
        .unwrap();
        let stepper = Stepper::new(&drift, &[]).unwrap();
        assert_eq!(stepper.kind(), StepKind::RealSymmetric);
        let psi0 = ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let out = stepper.evolve_state(1.0, &[], 300, &psi0).unwrap();
        let u = expm_hermitian(&drift.matrix(), c(0.0, -1.0));
        assert!((out - u * psi0).camax() < 1e-6);
    }

    #[test]
    fn constant_pulse_is_exact_at_any_step_count() {
        let drift = PauliSum::from_labels(&[(0.5, "ZI"), (0.3, "IZ")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(1.0, "ZZ")]).unwrap();
        let stepper = Stepper::new(&drift, std::slice::from_ref(&ctrl)).unwrap();
        let pulse = [const_pulse(0.7)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi0 = random_state(4, &mut rng);
        let h_total = drift.matrix() + ctrl.matrix() * c(0.7, 0.0);
        let t = 2.5;
        let dense = expm_hermitian(&h_total, c(0.0, -t)) * &psi0;
        for n_steps in [1, 7, 300, 600] {
            let out = stepper.evolve_state(t, &pulse, n_steps, &psi0).unwrap();
            assert!((&out - &dense).camax() < 1e-6, "n_steps {n_steps}");
        }
    }

    #[test]
    fn midpoint_stepping_converges_with_step_count() {
        let drift = PauliSum::from_labels(&[(1.0, "XI"), (0.5, "IZ")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(1.0, "ZZ")]).unwrap();
        let stepper = Stepper::new(&drift, std::slice::from_ref(&ctrl)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pulse = [random_pulse(4, 2.0, &mut rng)];
        let psi0 = random_state(4, &mut rng);
        let t = 3.0;
        let reference = stepper.evolve_state(t, &pulse, 9600, &psi0).unwrap();
        let coarse = (stepper.evolve_state(t, &pulse, 300, &psi0).unwrap() - &reference).camax();
        let fine = (stepper.evolve_state(t, &pulse, 600, &psi0).unwrap() - &reference).camax();
        assert!(coarse < 1e-3, "coarse error {coarse}");
        assert!(fine < 0.6 * coarse, "no convergence: {fine} vs {coarse}");
    }

    #[test]
    fn evolution_is_state_linear() {
        let drift = PauliSum::from_labels(&[(0.8, "XI")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(0.6, "ZZ")]).unwrap();
        let stepper = Stepper::new(&drift, std::slice::from_ref(&ctrl)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pulse = [random_pulse(3, 1.0, &mut rng)];
        let u = random_state(4, &mut rng);
        let v = random_state(4, &mut rng);
        let (a, b) = (c(0.6, 0.2), c(-0.3, 0.7));
        let combo = &u * a + &v * b;
        let norm = combo.norm();
        let combo_unit = &combo / C64::from(norm);
        let lhs = stepper.evolve_state(1.7, &pulse, 300, &combo_unit).unwrap();
        let eu = stepper.evolve_state(1.7, &pulse, 300, &u).unwrap();
        let ev = stepper.evolve_state(1.7, &pulse, 300, &v).unwrap();
        let rhs = (eu * a + ev * b) / C64::from(norm);
        assert!((lhs - rhs).camax() < 1e-9);
    }

    #[test]
    fn fast_paths_agree_with_hermitian_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // diagonal problem
        let drift_d = PauliSum::from_labels(&[(0.5, "ZI"), (0.5, "IZ")]).unwrap();
        let ctrl_d = PauliSum::from_labels(&[(0.5, "ZZ")]).unwrap();
        // real-symmetric problem (exchange terms)
        let drift_r = PauliSum::from_labels(&[(0.75, "ZI"), (0.25, "IZ")]).unwrap();
        let ctrl_r = PauliSum::from_labels(&[
            (0.25, "II"),
            (0.25, "XX"),
            (0.25, "YY"),
            (0.25, "ZZ"),
        ])
        .unwrap();
        for (drift, ctrl, expect) in [
            (drift_d, ctrl_d, StepKind::Diagonal),
            (drift_r, ctrl_r, StepKind::RealSymmetric),
        ] {
            let ctrls = std::slice::from_ref(&ctrl);
            let auto = Stepper::new(&drift, ctrls).unwrap();
            assert_eq!(auto.kind(), expect);
            let herm = Stepper::with_kind(&drift, ctrls, StepKind::Hermitian).unwrap();
            let pulse = [random_pulse(5, 3.0, &mut rng)];
            let psi0 = random_state(4, &mut rng);
            let a = auto.evolve_state(2.2, &pulse, 300, &psi0).unwrap();
            let b = herm.evolve_state(2.2, &pulse, 300, &psi0).unwrap();
            assert!((&a - &b).camax() < 1e-11, "{expect:?}");
            let ua = auto.evolve_unitary(2.2, &pulse, 300).unwrap();
            let ub = herm.evolve_unitary(2.2, &pulse, 300).unwrap();
            assert!((ua - ub).camax() < 1e-11, "{expect:?} unitary");
        }
    }

    #[test]
    fn complex_hermitian_path_handles_y_terms() {
        let drift = PauliSum::from_labels(&[(0.9, "YZ"), (0.4, "XI")]).unwrap();
        let stepper = Stepper::new(&drift, &[]).unwrap();
        assert_eq!(stepper.kind(), StepKind::Hermitian);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi0 = random_state(4, &mut rng);
        let out = stepper.evolve_state(1.1, &[], 300, &psi0).unwrap();
        let dense = expm_hermitian(&drift.matrix(), c(0.0, -1.1)) * &psi0;
        assert!((out - dense).camax() < 1e-8);
    }

    #[test]
    fn unitary_columns_match_basis_state_evolution() {
        let drift = PauliSum::from_labels(&[(1.0, "XI"), (0.5, "ZZ")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(1.0, "IZ")]).unwrap();
        let stepper = Stepper::new(&drift, std::slice::from_ref(&ctrl)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pulse = [random_pulse(4, 2.0, &mut rng)];
        let u = stepper.evolve_unitary(1.9, &pulse, 200).unwrap();
        for b in 0..4 {
            let mut e = DVector::<C64>::zeros(4);
            e[b] = c(1.0, 0.0);
            let col = stepper.evolve_state(1.9, &pulse, 200, &e).unwrap();
            assert!((u.column(b) - col).camax() < 1e-12);
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let drift = PauliSum::from_labels(&[(1.0, "Z")]).unwrap();
        let stepper = Stepper::new(&drift, &[]).unwrap();
        let psi0 = ket(&[(1.0, 0.0), (0.0, 0.0)]);
        assert!(stepper.evolve_state(0.0, &[], 10, &psi0).is_err());
        assert!(stepper.evolve_state(-1.0, &[], 10, &psi0).is_err());
        assert!(stepper.evolve_state(1.0, &[], 0, &psi0).is_err());
        assert!(stepper.evolve_state(1.0, &[const_pulse(1.0)], 10, &psi0).is_err());
        let bad = ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert!(stepper.evolve_state(1.0, &[], 10, &bad).is_err());
        assert!(Stepper::with_kind(&drift, &[], StepKind::Diagonal).is_ok());
        let x = PauliSum::from_labels(&[(1.0, "X")]).unwrap();
        assert!(Stepper::with_kind(&x, &[], StepKind::Diagonal).is_err());
    }

    #[test]
    fn control_problem_validation() {
        let drift = PauliSum::from_labels(&[(1.0, "Z")]).unwrap();
        let good = ket(&[(1.0, 0.0), (0.0, 0.0)]);
        let unnormalized = ket(&[(0.9, 0.0), (0.0, 0.0)]);
        assert!(ControlProblem::new(
            drift.clone(),
            vec![],
            good.clone(),
            good.clone(),
            NoiseModel::Noiseless,
            300,
            10.0,
        )
        .is_ok());
        assert!(ControlProblem::new(
            drift.clone(),
            vec![],
            unnormalized,
            good.clone(),
            NoiseModel::Noiseless,
            300,
            10.0,
        )
        .is_err());
        assert!(ControlProblem::new(
            drift,
            vec![],
            good.clone(),
            good,
            NoiseModel::Noiseless,
            0,
            10.0,
        )
        .is_err());
    }

    #[test]
    fn pooled_terms_are_unique() {
        let drift = PauliSum::from_labels(&[(0.5, "ZI"), (0.5, "IZ")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(1.0, "ZZ"), (0.2, "ZI")]).unwrap();
        let good = ket(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let problem = ControlProblem::new(
            drift,
            vec![(ctrl, const_pulse(0.0))],
            good.clone(),
            good,
            NoiseModel::Noiseless,
            300,
            10.0,
        )
        .unwrap();
        let terms = problem.hamiltonian_terms();
        assert_eq!(terms.len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn evolution_preserves_norm(seed in 0u64..500, t in 0.05f64..8.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let drift = PauliSum::from_labels(&[(1.0, "XI"), (0.7, "ZZ")]).unwrap();
            let ctrl = PauliSum::from_labels(&[(1.0, "IZ")]).unwrap();
            let stepper = Stepper::new(&drift, std::slice::from_ref(&ctrl)).unwrap();
            let pulse = [random_pulse(4, 5.0, &mut rng)];
            let psi0 = random_state(4, &mut rng);
            let out = stepper.evolve_state(t, &pulse, 150, &psi0).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-9);
        }
    }
}
