//! Dense complex-matrix primitives.
//!
//! Every rank and positivity judgment in the crate goes through
//! [`rank_eps`] and [`is_psd`], whose tolerances are relative to
//! `max(1, max|λ|)`.

mod basis;
mod eigh;
mod matrix;
pub mod random;
mod svd;
mod tensor;

use thiserror::Error;

pub use basis::{hermitian_basis, unvec_hermitian, vec_hermitian};
pub use eigh::{eigenvalues, eigh, Eigh};
pub use matrix::{ComplexMatrix, HermitianMatrix, C64};
pub use svd::JacobiSvd;
pub use tensor::{kron, partial_trace_over_1, partial_trace_over_2, DimensionPair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("tensor factors must have dimension at least 1")]
    EmptyFactor,
}

fn scale_of(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).fold(1.0, f64::max)
}

/// Number of eigenvalues with `|λ| > tol · max(1, max|λ|)`.
pub fn rank_eps(h: &HermitianMatrix, tol: f64) -> usize {
    let values = eigenvalues(h);
    let cut = tol * scale_of(&values);
    values.iter().filter(|v| v.abs() > cut).count()
}

/// `λ_min ≥ −tol · max(1, max|λ|)`.
pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    let values = eigenvalues(h);
    let floor = -tol * scale_of(&values);
    values.first().is_none_or(|&m| m >= floor)
}

/// Largest eigenvalue modulus.
pub fn spectral_norm(h: &HermitianMatrix) -> f64 {
    eigh(h).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::random::{random_hermitian, random_psd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn rank_examples() {
        assert_eq!(
            rank_eps(&HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]), 1e-9),
            1
        );
        assert_eq!(rank_eps(&HermitianMatrix::identity(4).scale(0.5), 1e-9), 4);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        assert_eq!(rank_eps(&HermitianMatrix::projector(&[h, z, z, h]), 1e-9), 1);
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&HermitianMatrix::identity(2), 1e-9));
        assert!(!is_psd(&HermitianMatrix::from_real_diagonal(&[1.0, -0.1]), 1e-9));
        assert!(is_psd(&HermitianMatrix::zeros(3), 0.0));
    }

    #[test]
    fn half_min_eigenvalue_shift_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 2..7 {
            let k = random_psd(&mut rng, n, n);
            let l = random_hermitian(&mut rng, n);
            let eps = 0.5 * eigh(&k).min() / spectral_norm(&l);
            assert!(is_psd(&k.add_scaled(eps, &l), 1e-12));
            assert!(is_psd(&k.add_scaled(-eps, &l), 1e-12));
        }
    }
}
