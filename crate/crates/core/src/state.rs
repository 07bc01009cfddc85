//! Bipartite density matrices tagged with their factor dimensions.

use crate::numcore::{
    eigh, partial_trace_over_1, partial_trace_over_2, ComplexMatrix, DimensionPair, HermitianMatrix, LinalgError,
};

/// A candidate state on `H₁ ⊗ H₂`.
///
/// The matrix is kept as supplied, so hermiticity and positivity are
/// properties to validate rather than assumptions; see
/// [`validate_membership`](crate::certifier::validate_membership).
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState {
    dims: DimensionPair,
    rho: ComplexMatrix,
}

impl CoupledState {
    pub fn new(dims: DimensionPair, rho: ComplexMatrix) -> Result<Self, LinalgError> {
        let n = dims.n();
        if rho.rows() != n || rho.cols() != n {
            return Err(LinalgError::ShapeMismatch {
                expected: (n, n),
                found: (rho.rows(), rho.cols()),
            });
        }
        Ok(Self { dims, rho })
    }

    pub fn from_hermitian(dims: DimensionPair, rho: HermitianMatrix) -> Result<Self, LinalgError> {
        Self::new(dims, rho.into_matrix())
    }

    /// `ρ₁ ⊗ ρ₂`.
    pub fn product(rho1: &HermitianMatrix, rho2: &HermitianMatrix) -> Self {
        let dims = DimensionPair::new(rho1.order(), rho2.order()).expect("non-empty factors");
        Self {
            dims,
            rho: crate::numcore::kron(rho1, rho2),
        }
    }

    pub fn dims(&self) -> DimensionPair {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    /// Hermitian part `(ρ + ρ†)/2`.
    pub fn hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(&self.rho).expect("shape checked at construction")
    }

    /// `Tr_{H₂} ρ`.
    pub fn marginal1(&self) -> HermitianMatrix {
        let m = partial_trace_over_2(&self.rho, self.dims).expect("shape checked at construction");
        HermitianMatrix::symmetrized(&m).expect("square")
    }

    /// `Tr_{H₁} ρ`.
    pub fn marginal2(&self) -> HermitianMatrix {
        let m = partial_trace_over_1(&self.rho, self.dims).expect("shape checked at construction");
        HermitianMatrix::symmetrized(&m).expect("square")
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let h = self.hermitian();
        h.trace_product(&h)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.hermitian()).values
    }
}
