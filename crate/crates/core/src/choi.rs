//! Gate compilation as state transfer on a doubled register.
//!
//! Each logical qubit gets an ancilla partner; the initial state is n Bell
//! pairs and the target is (U_target on the system half) applied to them.
//! State fidelity on the doubled register then equals the gate fidelity
//! |Tr(U~^dag U_target)|^2 / 4^n. Drift, controls, and jump operators act on
//! the system half only and are embedded with identities on the ancillas.
//!
//! The default qubit order interleaves system and ancilla qubits (system at
//! even 0-indexed positions); a block layout (system first) is available for
//! interop and produces identical fidelities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ansatz::PulseAnsatz;
use crate::fidelity::{noiseless_fidelity, NoisyTargetObservable};
use crate::noise::NoiseModel;
use crate::pauli::PauliSum;
use crate::propagate::ControlProblem;
use crate::{C64, Error, Result};

/// Placement of system vs ancilla qubits on the doubled register.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitLayout {
    /// System qubit q at position 2q, its ancilla at 2q+1.
    Interleaved,
    /// System qubits first (0..n), ancillas after (n..2n).
    Block,
}

impl QubitLayout {
    pub fn system_positions(self, n: usize) -> Vec<usize> {
        match self {
            QubitLayout::Interleaved => (0..n).map(|q| 2 * q).collect(),
            QubitLayout::Block => (0..n).collect(),
        }
    }

    pub fn ancilla_positions(self, n: usize) -> Vec<usize> {
        match self {
            QubitLayout::Interleaved => (0..n).map(|q| 2 * q + 1).collect(),
            QubitLayout::Block => (n..2 * n).collect(),
        }
    }
}

/// Full-register index with system bits `a` and ancilla bits `b` placed per
/// the layout (bit q of a word = qubit q of the logical register).
fn doubled_index(layout: QubitLayout, n: usize, a: usize, b: usize) -> usize {
    // state indices order qubit 0 as the most significant bit
    let mut idx = 0usize;
    let total = 2 * n;
    for (q, &p) in layout.system_positions(n).iter().enumerate() {
        idx |= ((a >> (n - 1 - q)) & 1) << (total - 1 - p);
    }
    for (q, &p) in layout.ancilla_positions(n).iter().enumerate() {
        idx |= ((b >> (n - 1 - q)) & 1) << (total - 1 - p);
    }
    idx
}

/// n Bell pairs: 2^{-n/2} sum_b |b>_sys |b>_anc.
pub fn bell_pairs_state(n: usize, layout: QubitLayout) -> DVector<C64> {
    let dim_logical = 1usize << n;
    let mut psi = DVector::<C64>::zeros(1 << (2 * n));
    let amp = C64::from(1.0 / (dim_logical as f64).sqrt());
    for b in 0..dim_logical {
        psi[doubled_index(layout, n, b, b)] = amp;
    }
    psi
}

/// (U on system half) applied to the Bell pairs: amplitude U[a,b] / 2^{n/2}
/// at the index with system bits a and ancilla bits b.
pub fn lifted_gate_state(u: &DMatrix<C64>, layout: QubitLayout) -> Result<DVector<C64>> {
    let dim = u.nrows();
    if !dim.is_power_of_two() || u.ncols() != dim {
        return Err(Error::Dimension { expected: dim, got: u.ncols() });
    }
    let n = dim.trailing_zeros() as usize;
    let defect = (u.adjoint() * u - DMatrix::<C64>::identity(dim, dim)).camax();
    if defect > 1e-10 {
        return Err(Error::Config(format!("target gate is not unitary (defect {defect})")));
    }
    let mut psi = DVector::<C64>::zeros(1 << (2 * n));
    let scale = C64::from(1.0 / (dim as f64).sqrt());
    for a in 0..dim {
        for b in 0..dim {
            psi[doubled_index(layout, n, a, b)] = u[(a, b)] * scale;
        }
    }
    Ok(psi)
}

/// State fidelity on the doubled register; equals |Tr(U~^dag U_target)|^2/4^n
/// when both states are lifted unitaries.
pub fn gate_fidelity_via_choi(
    psi_f: &DVector<C64>,
    target_lifted: &DVector<C64>,
) -> Result<f64> {
    noiseless_fidelity(psi_f, target_lifted)
}

/// diag(1, 1, 1, -1).
pub fn cz_gate() -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::identity(4, 4);
    m[(3, 3)] = C64::from(-1.0);
    m
}

/// Builtin target gates for configs.
pub fn named_gate(name: &str, n: usize) -> Result<DMatrix<C64>> {
    match name {
        "CZ" | "cz" => {
            if n != 2 {
                return Err(Error::Config(format!("CZ needs 2 qubits, problem has {n}")));
            }
            Ok(cz_gate())
        }
        "identity" | "I" => Ok(DMatrix::identity(1 << n, 1 << n)),
        other => Err(Error::Config(format!("unknown target gate {other:?}"))),
    }
}

/// Lift a logical gate-compilation problem to a state-transfer problem on
/// the doubled register.
#[allow(clippy::too_many_arguments)]
pub fn lift_problem(
    drift: &PauliSum,
    controls: &[(PauliSum, PulseAnsatz)],
    target_gate: &DMatrix<C64>,
    noise: &NoiseModel,
    n_steps: usize,
    t_max: f64,
    layout: QubitLayout,
) -> Result<ControlProblem> {
    let n = drift.n_qubits();
    if n > 3 {
        return Err(Error::Config(format!(
            "doubled register of {} qubits exceeds the supported cap",
            2 * n
        )));
    }
    if target_gate.nrows() != 1 << n {
        return Err(Error::Dimension { expected: 1 << n, got: target_gate.nrows() });
    }
    let positions = layout.system_positions(n);
    let total = 2 * n;
    let lifted_drift = drift.embed(total, &positions)?;
    let lifted_controls: Vec<(PauliSum, PulseAnsatz)> = controls
        .iter()
        .map(|(h, p)| Ok((h.embed(total, &positions)?, p.clone())))
        .collect::<Result<_>>()?;
    let initial = bell_pairs_state(n, layout);
    let target = lifted_gate_state(target_gate, layout)?;
    let lifted_noise = noise.lift(n, total, &positions)?;
    ControlProblem::new(
        lifted_drift,
        lifted_controls,
        initial,
        target,
        lifted_noise,
        n_steps,
        t_max,
    )
}

struct GateTerm {
    /// System-half Pauli as a dense logical matrix.
    m_sys: DMatrix<C64>,
    /// Transpose of the ancilla-half Pauli, dense logical.
    n_anc_t: DMatrix<C64>,
    base: f64,
    lambda: f64,
}

/// Fidelity evaluator for gate problems that consumes the logical evolution
/// operator directly: <w_U|(M tensor N)|w_U> = Tr(U^dag M U N^T) / 2^n.
///
/// Mathematically identical to evaluating the lifted observable on the
/// lifted state, at a fraction of the propagation cost.
pub struct GateObservable {
    n_logical: usize,
    terms: Vec<GateTerm>,
    truncation_threshold: f64,
}

impl GateObservable {
    /// Split each lifted observable term into its system and ancilla halves.
    pub fn from_lifted(
        observable: &NoisyTargetObservable,
        layout: QubitLayout,
    ) -> Result<Self> {
        let total = observable.n_qubits();
        if total % 2 != 0 {
            return Err(Error::Config(format!(
                "lifted register must have an even qubit count, got {total}"
            )));
        }
        let n = total / 2;
        let sys = layout.system_positions(n);
        let anc = layout.ancilla_positions(n);
        let mut terms = Vec::new();
        for (g, base) in observable.coefficients_at(0.0) {
            let m_part = g.restricted(&sys)?;
            let n_part = g.restricted(&anc)?;
            terms.push(GateTerm {
                m_sys: m_part.matrix(),
                n_anc_t: n_part.matrix().transpose(),
                base,
                lambda: observable.lambda_of(&g)?,
            });
        }
        Ok(Self {
            n_logical: n,
            terms,
            truncation_threshold: observable.truncation_threshold(),
        })
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Logical (system) qubit count.
    pub fn n_logical(&self) -> usize {
        self.n_logical
    }

    /// sum_j coeff_j Tr(U^dag M_j U N_j^T) / 2^n, clamped to [0, 1].
    pub fn evaluate(&self, u: &DMatrix<C64>, t: f64) -> Result<f64> {
        let dim = 1usize << self.n_logical;
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: u.nrows() });
        }
        if t < 0.0 {
            return Err(Error::Config(format!("negative evolution time {t}")));
        }
        let scale = 1.0 / dim as f64;
        let mut f = 0.0;
        for term in &self.terms {
            let coeff = term.base * (-term.lambda * t).exp();
            if coeff.abs() < self.truncation_threshold {
                continue;
            }
            let conj = u.adjoint() * &term.m_sys * u;
            let trace: C64 = (conj * &term.n_anc_t).diagonal().iter().sum();
            f += coeff * scale * trace.re;
        }
        if !(0.0..=1.0).contains(&f) {
            log::debug!("clamping gate shortcut fidelity {f} into [0, 1]");
            f = f.clamp(0.0, 1.0);
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::certify_commutation;
    use crate::pauli::PauliString;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let qr = g.qr();
        qr.q()
    }

    fn partial_trace_ancillas(
        psi: &DVector<C64>,
        n: usize,
        layout: QubitLayout,
    ) -> DMatrix<C64> {
        let dim = 1usize << n;
        DMatrix::from_fn(dim, dim, |a, ap| {
            (0..dim)
                .map(|b| {
                    psi[doubled_index(layout, n, a, b)]
                        * psi[doubled_index(layout, n, ap, b)].conj()
                })
                .sum()
        })
    }

    #[test]
    fn bell_pairs_are_unit_norm_and_maximally_entangled() {
        for layout in [QubitLayout::Interleaved, QubitLayout::Block] {
            let w = bell_pairs_state(2, layout);
            assert!((w.norm() - 1.0).abs() < 1e-14);
            let reduced = partial_trace_ancillas(&w, 2, layout);
            let expect = DMatrix::<C64>::identity(4, 4) * c(0.25, 0.);
            assert!((reduced - expect).camax() < 1e-14, "{layout:?}");
        }
    }

    #[test]
    fn two_qubit_bell_pairs_interleaved_amplitudes() {
        // system bits at positions 0 and 2, each ancilla copying its
        // partner: |w> = (|0000> + |0011> + |1100> + |1111>)/2
        let w = bell_pairs_state(2, QubitLayout::Interleaved);
        for (idx, expect) in [(0b0000, 0.5), (0b0011, 0.5), (0b1100, 0.5), (0b1111, 0.5)] {
            assert!((w[idx] - c(expect, 0.)).norm() < 1e-14, "index {idx:04b}");
        }
        assert_eq!(w.iter().filter(|a| a.norm() > 1e-14).count(), 4);
    }

    #[test]
    fn lifted_identity_is_the_bell_state() {
        let id = DMatrix::<C64>::identity(4, 4);
        let lifted = lifted_gate_state(&id, QubitLayout::Interleaved).unwrap();
        let bell = bell_pairs_state(2, QubitLayout::Interleaved);
        assert!((lifted - bell).camax() < 1e-14);
    }

    #[test]
    fn cz_overlap_with_identity_is_quarter() {
        for layout in [QubitLayout::Interleaved, QubitLayout::Block] {
            let target = lifted_gate_state(&cz_gate(), layout).unwrap();
            let initial = bell_pairs_state(2, layout);
            let f = gate_fidelity_via_choi(&initial, &target).unwrap();
            // |Tr(CZ)/4|^2 = |2/4|^2
            assert!((f - 0.25).abs() < 1e-12, "{layout:?}");
        }
    }

    #[test]
    fn gate_fidelity_is_phase_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(4, &mut rng);
        let target = lifted_gate_state(&u, QubitLayout::Interleaved).unwrap();
        let phased = &u * c(0.0, 1.0);
        let lifted = lifted_gate_state(&phased, QubitLayout::Interleaved).unwrap();
        let f = gate_fidelity_via_choi(&lifted, &target).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn choi_overlap_equals_trace_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for layout in [QubitLayout::Interleaved, QubitLayout::Block] {
            for _ in 0..10 {
                let u = random_unitary(4, &mut rng);
                let v = random_unitary(4, &mut rng);
                let fu = lifted_gate_state(&u, layout).unwrap();
                let fv = lifted_gate_state(&v, layout).unwrap();
                let via_choi = gate_fidelity_via_choi(&fu, &fv).unwrap();
                let tr: C64 = (u.adjoint() * &v).diagonal().iter().sum();
                let via_trace = tr.norm_sqr() / 16.0;
                assert!((via_choi - via_trace).abs() < 1e-10, "{layout:?}");
            }
        }
    }

    #[test]
    fn non_unitary_target_is_rejected() {
        let mut m = DMatrix::<C64>::identity(4, 4);
        m[(0, 0)] = c(0.5, 0.);
        assert!(lifted_gate_state(&m, QubitLayout::Interleaved).is_err());
    }

    fn dipole_cz_lifted(layout: QubitLayout) -> ControlProblem {
        let drift = PauliSum::from_labels(&[(0.5, "ZI"), (0.5, "IZ")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(0.5, "ZZ")]).unwrap();
        let pulse = PulseAnsatz::zeroed(vec![1.0]).unwrap();
        lift_problem(
            &drift,
            &[(ctrl, pulse)],
            &cz_gate(),
            &NoiseModel::DipoleDipole { rate: 0.03 },
            300,
            10.0,
            layout,
        )
        .unwrap()
    }

    #[test]
    fn lifting_embeds_operators_and_noise_on_system_half() {
        let problem = dipole_cz_lifted(QubitLayout::Interleaved);
        assert_eq!(problem.n_qubits(), 4);
        let drift_labels: Vec<String> =
            problem.drift.terms().iter().map(|(_, p)| p.to_string()).collect();
        assert_eq!(drift_labels, ["ZIII", "IIZI"]);
        let jumps = problem.noise.jumps(4).unwrap().unwrap();
        let jump_labels: Vec<String> =
            jumps.entries().iter().map(|(p, _)| p.to_string()).collect();
        assert!(jump_labels.contains(&"ZIZI".to_string()), "{jump_labels:?}");
    }

    #[test]
    fn lifting_preserves_commutation_certificates() {
        let drift = PauliSum::from_labels(&[(0.5, "ZI"), (0.5, "IZ")]).unwrap();
        let ctrl = PauliSum::from_labels(&[(0.5, "ZZ")]).unwrap();
        let noise = NoiseModel::DipoleDipole { rate: 0.03 };
        let base_terms: Vec<PauliString> =
            drift.terms().iter().chain(ctrl.terms()).map(|&(_, p)| p).collect();
        let base_cert = certify_commutation(&base_terms, &noise, 2).unwrap();
        assert!(base_cert.commutes());
        let problem = dipole_cz_lifted(QubitLayout::Interleaved);
        let lifted_cert = problem.certify().unwrap();
        assert!(lifted_cert.commutes());
    }

    #[test]
    fn trivial_compilation_has_unit_fidelity() {
        // no dynamics, identity target: initial state already equals target
        let drift = PauliSum::new(2).unwrap();
        let id = DMatrix::<C64>::identity(4, 4);
        let problem = lift_problem(
            &drift,
            &[],
            &id,
            &NoiseModel::Noiseless,
            300,
            10.0,
            QubitLayout::Interleaved,
        )
        .unwrap();
        for t in [0.5, 2.0, 7.7] {
            let psi_f = crate::propagate::propagate(&problem, t).unwrap();
            let f = gate_fidelity_via_choi(&psi_f, &problem.target_state).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn layouts_give_identical_fidelities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pulse = PulseAnsatz::new(
            (0..3).map(|_| rng.random_range(0.1..=20.0)).collect(),
            (0..7).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        )
        .unwrap();
        let mut results = Vec::new();
        for layout in [QubitLayout::Interleaved, QubitLayout::Block] {
            let drift = PauliSum::from_labels(&[(0.5, "ZI"), (0.5, "IZ")]).unwrap();
            let ctrl = PauliSum::from_labels(&[(0.5, "ZZ")]).unwrap();
            let problem = lift_problem(
                &drift,
                &[(ctrl, pulse.clone())],
                &cz_gate(),
                &NoiseModel::Noiseless,
                300,
                10.0,
                layout,
            )
            .unwrap();
            let psi_f = crate::propagate::propagate(&problem, 2.1).unwrap();
            results.push(gate_fidelity_via_choi(&psi_f, &problem.target_state).unwrap());
        }
        assert!((results[0] - results[1]).abs() < 1e-12);
    }

    #[test]
    fn restricted_inverts_embed() {
        let g = PauliString::parse("XY").unwrap();
        let lifted = g.embed(4, &[0, 2]).unwrap();
        assert_eq!(lifted.to_string(), "XIYI");
        assert_eq!(lifted.restricted(&[0, 2]).unwrap(), g);
        assert_eq!(lifted.restricted(&[1, 3]).unwrap(), PauliString::identity(2));
    }

    #[test]
    fn gate_observable_matches_lifted_state_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let layout = QubitLayout::Interleaved;
        let target = lifted_gate_state(&cz_gate(), layout).unwrap();
        // lifted local dephasing spectrum on the doubled register
        let noise = NoiseModel::LocalDephasing { rate: 0.05 }
            .lift(2, 4, &layout.system_positions(2))
            .unwrap();
        let spectrum = noise.spectrum(4).unwrap();
        let lifted_obs =
            NoisyTargetObservable::assume_commuting(&target, &spectrum, 1e-12).unwrap();
        let gate_obs = GateObservable::from_lifted(&lifted_obs, layout).unwrap();
        // the CZ Choi state is a stabilizer state: exactly 16 nonzero terms
        assert_eq!(gate_obs.n_terms(), 16);
        for _ in 0..8 {
            let u = random_unitary(4, &mut rng);
            let lifted_u = lifted_gate_state(&u, layout).unwrap();
            for t in [0.0, 0.9, 3.3] {
                let via_state = lifted_obs.evaluate(&lifted_u, t).unwrap();
                let via_gate = gate_obs.evaluate(&u, t).unwrap();
                assert!(
                    (via_state - via_gate).abs() < 1e-12,
                    "t={t}: {via_state} vs {via_gate}"
                );
            }
        }
    }
}
