//! Quantum optimal control with time-optimized CRAB pulses.
//!
//! The crate optimizes piecewise-smooth control pulses for small spin systems,
//! treating the evolution time `T` as an optimization variable alongside the
//! pulse coefficients. Open-system effects enter through Pauli noise channels
//! that commute with the gate Hamiltonian; for those, the noisy fidelity is
//! evaluated by folding the decay into the target observable instead of
//! integrating a master equation, which keeps the optimization loop at
//! closed-system cost. A dense Lindblad integrator is included as the
//! ground-truth oracle for verifying that shortcut.
//!
//! Module map:
//! - [`pauli`]: symplectic Pauli strings, products, commutation, group tools.
//! - [`noise`]: jump-operator sets, Pauli decay spectra, commutation
//!   certificates, analytic channel forms.
//! - [`ansatz`]: truncated Fourier pulse basis and frequency draws.
//! - [`propagate`]: piecewise-constant Schrodinger propagation.
//! - [`fidelity`]: noiseless, commuting-noise, and closed-form fidelities.
//! - [`choi`]: gate-to-state compilation via doubled systems.
//! - [`lindblad`]: dense superoperator oracle.
//! - [`optimize`]: bounded quasi-Newton, basin-hopping, and bisection on the
//!   optimized-fidelity curve.
//! - [`experiments`]: the four shipped model systems and the identity test.
//! - [`bench`]: the sweep harness and its CSV/JSON reports.

pub mod ansatz;
pub mod bench;
pub mod choi;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fidelity;
pub mod lindblad;
pub mod linalg;
pub mod noise;
pub mod optimize;
pub mod pauli;
pub mod propagate;

pub use error::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
