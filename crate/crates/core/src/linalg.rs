//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// exp(scale * H) for Hermitian H, via eigendecomposition.
///
/// Exact per machine precision (no series truncation); for anti-Hermitian
/// scales (`scale = -i dt`) the result is unitary up to roundoff.
pub fn expm_hermitian(h: &DMatrix<C64>, scale: C64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| (scale * l).exp()),
    );
    let mut scaled = eig.eigenvectors.clone();
    for (j, col) in scaled.column_iter_mut().enumerate() {
        let mut col = col;
        col *= d[j];
    }
    &scaled * eig.eigenvectors.adjoint()
}

/// Column-stacking vectorization: |rho>> with rho's columns concatenated.
pub fn vec_col(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

/// Inverse of [`vec_col`] for a square matrix of side `dim`.
pub fn unvec_col(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// A B - B A.
pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// Max entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).camax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_pauli_x_rotation() {
        // exp(-i theta X) = cos(theta) I - i sin(theta) X
        let x = dmatrix![c(0., 0.), c(1., 0.); c(1., 0.), c(0., 0.)];
        let theta = 0.7;
        let u = expm_hermitian(&x, c(0., -theta));
        let expect = dmatrix![
            c(theta.cos(), 0.), c(0., -theta.sin());
            c(0., -theta.sin()), c(theta.cos(), 0.)
        ];
        assert!((u - expect).camax() < 1e-14);
    }

    #[test]
    fn expm_unitarity() {
        let h = dmatrix![
            c(1.0, 0.), c(0.3, 0.4);
            c(0.3, -0.4), c(-2.0, 0.)
        ];
        let u = expm_hermitian(&h, c(0., -0.9));
        let d = &u * u.adjoint() - DMatrix::<C64>::identity(2, 2);
        assert!(d.camax() < 1e-14);
    }

    #[test]
    fn vec_unvec_roundtrip() {
        let m = dmatrix![c(1., 2.), c(3., 4.); c(5., 6.), c(7., 8.)];
        let v = vec_col(&m);
        // column stacking: first column first
        assert_eq!(v[0], c(1., 2.));
        assert_eq!(v[1], c(5., 6.));
        assert_eq!(unvec_col(&v, 2), m);
    }
}
