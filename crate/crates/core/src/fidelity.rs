//! Fidelity evaluation: noiseless overlap, the commuting-noise shortcut via
//! a reweighted target observable, and the closed forms it reduces to for
//! depolarizing and group channels.
//!
//! The shortcut replaces a 4^N-dimensional noisy simulation with Pauli
//! expectation values of the final pure state: when the dissipator commutes
//! with the Hamiltonian part, pushing the noise onto the target observable
//! is exact. Terms are stored with their T-independent base coefficient
//! 2^{-N} <psi_g|G_j|psi_g> and reweighted by e^{-lambda_j T} at evaluation
//! time, so one observable serves every evolution time in a sweep.

use nalgebra::{DMatrix, DVector};

use crate::noise::{CommutationCertificate, DecaySpectrum};
use crate::pauli::{enumerate, PauliString};
use crate::{C64, Error, Result};

/// |<psi_g|psi_f>|^2.
pub fn noiseless_fidelity(psi_f: &DVector<C64>, psi_g: &DVector<C64>) -> Result<f64> {
    if psi_f.len() != psi_g.len() {
        return Err(Error::Dimension { expected: psi_g.len(), got: psi_f.len() });
    }
    Ok(psi_g.dotc(psi_f).norm_sqr())
}

/// Uniform-decay closed form: e^{-lambda T} F_U + 2^{-N}(1 - e^{-lambda T}).
pub fn depolarizing_fidelity(f_u: f64, lambda: f64, t: f64, n_qubits: usize) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&f_u) {
        return Err(Error::Config(format!("noiseless fidelity {f_u} outside [0, 1]")));
    }
    if lambda < 0.0 || t < 0.0 {
        return Err(Error::Config(format!("negative rate or time ({lambda}, {t})")));
    }
    let decay = (-lambda * t).exp();
    let dim_inv = (0.5f64).powi(n_qubits as i32);
    Ok(decay * f_u + dim_inv * (1.0 - decay))
}

/// Fidelity under a uniform-rate Pauli-group channel:
/// e^{-gamma T} |<g|f>|^2 + 2^{-N}(1 - e^{-gamma T}) sum_{G in commutant}
/// <g|G|g><f|G|f>.
pub fn group_channel_fidelity(
    psi_g: &DVector<C64>,
    psi_f: &DVector<C64>,
    commutant: &[PauliString],
    gamma: f64,
    t: f64,
) -> Result<f64> {
    if psi_f.len() != psi_g.len() {
        return Err(Error::Dimension { expected: psi_g.len(), got: psi_f.len() });
    }
    if gamma < 0.0 || t < 0.0 {
        return Err(Error::Config(format!("negative rate or time ({gamma}, {t})")));
    }
    let n = psi_g.len().trailing_zeros() as i32;
    let decay = (-gamma * t).exp();
    let overlap = psi_g.dotc(psi_f).norm_sqr();
    let mut commutant_part = 0.0;
    for g in commutant {
        commutant_part += g.expectation(psi_g).re * g.expectation(psi_f).re;
    }
    Ok(decay * overlap + (0.5f64).powi(n) * (1.0 - decay) * commutant_part)
}

struct ObservableTerm {
    pauli: PauliString,
    /// 2^{-N} <psi_g|G|psi_g>, independent of T.
    base: f64,
    lambda: f64,
}

/// The target state with the noise channel pushed onto it: a sum of Pauli
/// observables whose weights decay as e^{-lambda_j T}.
pub struct NoisyTargetObservable {
    n: usize,
    terms: Vec<ObservableTerm>,
    truncation_threshold: f64,
}

/// Default cutoff below which observable terms are dropped.
pub const DEFAULT_TRUNCATION_THRESHOLD: f64 = 1e-12;

impl NoisyTargetObservable {
    /// Build for a certified-commuting noise model.
    pub fn new(
        psi_g: &DVector<C64>,
        spectrum: &DecaySpectrum,
        certificate: &CommutationCertificate,
        truncation_threshold: f64,
    ) -> Result<Self> {
        if !certificate.commutes() {
            return Err(Error::Contract(
                "noise does not commute with the Hamiltonian; the shortcut \
                 fidelity would be wrong (use assume_commuting to override)"
                    .into(),
            ));
        }
        Self::assume_commuting(psi_g, spectrum, truncation_threshold)
    }

    /// Build without a commutation certificate. The result is exact only if
    /// the dissipator really commutes with the full Hamiltonian part; the
    /// caller owns that risk.
    pub fn assume_commuting(
        psi_g: &DVector<C64>,
        spectrum: &DecaySpectrum,
        truncation_threshold: f64,
    ) -> Result<Self> {
        let n = spectrum.n_qubits();
        if psi_g.len() != 1 << n {
            return Err(Error::Dimension { expected: 1 << n, got: psi_g.len() });
        }
        if !(truncation_threshold >= 0.0) {
            return Err(Error::Config("truncation threshold must be nonnegative".into()));
        }
        let scale = (0.5f64).powi(n as i32);
        let mut terms = Vec::new();
        for (j, g) in enumerate(n).enumerate() {
            let base = scale * g.expectation(psi_g).re;
            // e^{-lambda T} <= 1, so these can never clear the cutoff
            if base.abs() < truncation_threshold {
                continue;
            }
            terms.push(ObservableTerm { pauli: g, base, lambda: spectrum.lambdas()[j] });
        }
        Ok(Self { n, terms, truncation_threshold })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Terms retained after base-coefficient truncation.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn truncation_threshold(&self) -> f64 {
        self.truncation_threshold
    }

    /// Decay rate of a retained term.
    pub fn lambda_of(&self, g: &PauliString) -> Result<f64> {
        self.terms
            .iter()
            .find(|term| term.pauli == *g)
            .map(|term| term.lambda)
            .ok_or_else(|| Error::Config(format!("{g} is not a retained observable term")))
    }

    /// (pauli, coefficient) pairs at a given evolution time.
    pub fn coefficients_at(&self, t: f64) -> Vec<(PauliString, f64)> {
        self.terms
            .iter()
            .map(|term| (term.pauli, term.base * (-term.lambda * t).exp()))
            .filter(|(_, c)| c.abs() >= self.truncation_threshold)
            .collect()
    }

    /// sum_j 2^{-N} e^{-lambda_j T} <g|G_j|g> <f|G_j|f>, clamped to [0, 1].
    pub fn evaluate(&self, psi_f: &DVector<C64>, t: f64) -> Result<f64> {
        if psi_f.len() != 1 << self.n {
            return Err(Error::Dimension { expected: 1 << self.n, got: psi_f.len() });
        }
        if t < 0.0 {
            return Err(Error::Config(format!("negative evolution time {t}")));
        }
        let mut f = 0.0;
        for term in &self.terms {
            let coeff = term.base * (-term.lambda * t).exp();
            if coeff.abs() < self.truncation_threshold {
                continue;
            }
            f += coeff * term.pauli.expectation(psi_f).re;
        }
        if !(0.0..=1.0).contains(&f) {
            log::debug!("clamping shortcut fidelity {f} into [0, 1]");
            f = f.clamp(0.0, 1.0);
        }
        Ok(f)
    }
}

/// Decompose Tr(rho_g K(T) rho_c K(T)^dag) with K(T) = e^{-i omega K0 T} and
/// K0 an involution into a + b cos(2 omega T) + c sin(2 omega T).
///
/// Returns (a, b, c). The triple is T- and omega-independent; the
/// reconstruction identity holds for every T.
pub fn oscillation_components(
    rho_g: &DMatrix<C64>,
    rho_c: &DMatrix<C64>,
    k0: &DMatrix<C64>,
) -> Result<(f64, f64, f64)> {
    let d = k0.nrows();
    if rho_g.nrows() != d || rho_c.nrows() != d {
        return Err(Error::Dimension { expected: d, got: rho_g.nrows().max(rho_c.nrows()) });
    }
    let involution_defect = (k0 * k0 - DMatrix::<C64>::identity(d, d)).camax();
    if involution_defect > 1e-10 {
        return Err(Error::Config(format!(
            "K0 is not an involution (defect {involution_defect})"
        )));
    }
    let tr = |m: DMatrix<C64>| -> C64 { m.diagonal().iter().sum() };
    let direct = tr(rho_g * rho_c);
    let conjugated = tr(rho_g * k0 * rho_c * k0);
    let cross = tr(rho_g * k0 * rho_c);
    let a = 0.5 * (direct + conjugated).re;
    let b = 0.5 * (direct - conjugated).re;
    // the two cross traces are mutual conjugates, so the difference is
    // purely imaginary and c is real
    let c = cross.im;
    Ok((a, b, c))
}

/// a + b cos(2 omega T) + c sin(2 omega T).
pub fn oscillation_value(components: (f64, f64, f64), omega: f64, t: f64) -> f64 {
    let (a, b, c) = components;
    a + b * (2.0 * omega * t).cos() + c * (2.0 * omega * t).sin()
}
