//! Ground-truth open-system integrator.
//!
//! Builds dense Liouvillian superoperators in the column-stacking convention
//! (vec(A rho B) = (B^T kron A) vec(rho)) and integrates the master equation
//! by piecewise-constant exponential stepping. Nothing here is fast; it is
//! the oracle every shortcut fidelity is validated against, and it runs only
//! in tests and the `verify` command.

use nalgebra::{DMatrix, DVector};

use crate::ansatz::PulseAnsatz;
use crate::linalg::{hermiticity_defect, unvec_col, vec_col};
use crate::propagate::ControlProblem;
use crate::{C64, Error, Result};

/// -i (I kron H - H^T kron I): the commutator part acting on vec(rho).
pub fn hamiltonian_superop(h: &DMatrix<C64>) -> DMatrix<C64> {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let minus_i = C64::new(0.0, -1.0);
    (id.kronecker(h) - h.transpose().kronecker(&id)) * minus_i
}

/// sum_k (L_k^* kron L_k - 1/2 I kron L_k^dag L_k - 1/2 (L_k^dag L_k)^T kron I).
pub fn dissipator_superop(dim: usize, lindblads: &[DMatrix<C64>]) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(dim, dim);
    let mut out = DMatrix::<C64>::zeros(dim * dim, dim * dim);
    let half = C64::from(0.5);
    for l in lindblads {
        let ldl = l.adjoint() * l;
        out += l.map(|e| e.conj()).kronecker(l);
        out -= id.kronecker(&ldl) * half;
        out -= ldl.transpose().kronecker(&id) * half;
    }
    out
}

/// Frobenius norm of AB - BA.
pub fn commutator_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a * b - b * a).norm()
}

/// exp(A t) v by scaled Taylor summation (exact to machine precision).
///
/// The step count scales with the 1-norm of A t, so stiff generators cost
/// more substeps instead of losing accuracy.
pub fn expm_multiply(a: &DMatrix<C64>, v: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
    let one_norm = a
        .column_iter()
        .map(|c| c.iter().map(|e| e.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let scaled = one_norm * t.abs();
    let substeps = scaled.div_euclid(2.0) as usize + 1;
    let dt = C64::from(t / substeps as f64);
    let mut w = v.clone();
    for _ in 0..substeps {
        let mut term = w.clone();
        let mut acc = w;
        let mut converged = false;
        for k in 1..=120u64 {
            term = a * &term * (dt / C64::from(k as f64));
            acc += &term;
            if term.norm() <= 1e-16 * acc.norm() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(
                "matrix exponential action failed to converge".into(),
            ));
        }
        w = acc;
    }
    Ok(w)
}

/// Integrate d(rho)/dt = L_H(t) rho + L_D rho over [0, T] in `n_steps`
/// piecewise-constant steps; `h_at` returns the instantaneous Hamiltonian at
/// the step's midpoint time.
///
/// Validates trace preservation (within 1e-6) and Hermiticity of the result.
pub fn integrate_master_equation(
    h_at: impl Fn(usize) -> DMatrix<C64>,
    dissipator: &DMatrix<C64>,
    rho0: &DMatrix<C64>,
    t: f64,
    n_steps: usize,
) -> Result<DMatrix<C64>> {
    if t < 0.0 {
        return Err(Error::Numerical(format!("negative evolution time {t}")));
    }
    let dim = rho0.nrows();
    if dissipator.nrows() != dim * dim {
        return Err(Error::Dimension { expected: dim * dim, got: dissipator.nrows() });
    }
    let mut v = vec_col(rho0);
    if t > 0.0 {
        if n_steps == 0 {
            return Err(Error::Numerical("zero integration steps".into()));
        }
        let dt = t / n_steps as f64;
        for s in 0..n_steps {
            let h = h_at(s);
            let gen = hamiltonian_superop(&h) + dissipator;
            v = expm_multiply(&gen, &v, dt)?;
        }
    }
    let rho = unvec_col(&v, dim);
    let trace: C64 = rho.diagonal().iter().sum();
    let t0: C64 = rho0.diagonal().iter().sum();
    if (trace - t0).norm() > 1e-6 {
        return Err(Error::Numerical(format!(
            "trace drifted from {t0} to {trace} during integration"
        )));
    }
    if hermiticity_defect(&rho) > 1e-8 {
        return Err(Error::Numerical("integrated state lost Hermiticity".into()));
    }
    Ok(rho)
}

/// Full master-equation fidelity <target| rho(t) |target> for a control
/// problem whose pulses are already set on its controls.
///
/// Uses the same midpoint discretization of the time-dependent Hamiltonian
/// as the fast propagator, so agreement with the shortcut fidelity is not
/// limited by Trotter error.
pub fn oracle_fidelity(problem: &ControlProblem, t: f64) -> Result<f64> {
    let dim = 1usize << problem.n_qubits();
    let h_drift = problem.drift.matrix();
    let h_controls: Vec<(DMatrix<C64>, PulseAnsatz)> = problem
        .controls
        .iter()
        .map(|(h, p)| (h.matrix(), p.clone()))
        .collect();
    let dissipator = match problem.noise.jumps(problem.n_qubits())? {
        Some(set) => dissipator_superop(dim, &set.lindblad_matrices()),
        None => DMatrix::zeros(dim * dim, dim * dim),
    };
    let rho0 = &problem.initial_state * problem.initial_state.adjoint();
    let dt = t / problem.n_steps as f64;
    let rho_f = integrate_master_equation(
        |s| {
            let ts = (s as f64 + 0.5) * dt;
            let mut h = h_drift.clone();
            for (hc, pulse) in &h_controls {
                h += hc * C64::from(pulse.value(ts));
            }
            h
        },
        &dissipator,
        &rho0,
        t,
        problem.n_steps,
    )?;
    let g = &problem.target_state;
    Ok((g.adjoint() * &rho_f * g)[(0, 0)].re)
}

/// Complete-positivity sanity numbers: (trace deviation, min eigenvalue).
pub fn cptp_check(rho: &DMatrix<C64>) -> (f64, f64) {
    let trace: C64 = rho.diagonal().iter().sum();
    let sym = (rho + rho.adjoint()) * C64::from(0.5);
    let eig = sym.symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    ((trace - C64::from(1.0)).norm(), min_eig)
}
