//! Bipartite index bookkeeping, Kronecker products and partial traces.
//!
//! Basis vector `e_i ⊗ f_j` of `H₁ ⊗ H₂` lives at storage index `i·d2 + j`
//! (0-based, lexicographic in `(i, j)`). Every module relies on this layout.

use super::matrix::{ComplexMatrix, C64};
use super::LinalgError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DimensionPair {
    d1: usize,
    d2: usize,
}

impl DimensionPair {
    pub fn new(d1: usize, d2: usize) -> Result<Self, LinalgError> {
        if d1 == 0 || d2 == 0 {
            return Err(LinalgError::EmptyFactor);
        }
        Ok(Self { d1, d2 })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Total dimension `d1·d2`.
    pub fn n(&self) -> usize {
        self.d1 * self.d2
    }

    /// Storage index of `e_i ⊗ f_j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.d1 && j < self.d2);
        i * self.d2 + j
    }

    fn expect_square(&self, x: &ComplexMatrix) -> Result<(), LinalgError> {
        let n = self.n();
        if x.rows() != n || x.cols() != n {
            return Err(LinalgError::ShapeMismatch {
                expected: (n, n),
                found: (x.rows(), x.cols()),
            });
        }
        Ok(())
    }
}

/// Kronecker product; `(A⊗B)(i·rb + k, j·cb + l) = A(i,j)·B(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * rb, a.cols() * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// `Tr_{H₂} X`: `(Tr₂X)(i,i') = Σ_j X(g_ij, g_i'j)`.
pub fn partial_trace_over_2(x: &ComplexMatrix, dims: DimensionPair) -> Result<ComplexMatrix, LinalgError> {
    dims.expect_square(x)?;
    let (d1, d2) = (dims.d1, dims.d2);
    let mut out = ComplexMatrix::zeros(d1, d1);
    for i in 0..d1 {
        for ip in 0..d1 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d2 {
                acc += x[(dims.index(i, j), dims.index(ip, j))];
            }
            out[(i, ip)] = acc;
        }
    }
    Ok(out)
}

/// `Tr_{H₁} X`: `(Tr₁X)(j,j') = Σ_i X(g_ij, g_ij')`.
pub fn partial_trace_over_1(x: &ComplexMatrix, dims: DimensionPair) -> Result<ComplexMatrix, LinalgError> {
    dims.expect_square(x)?;
    let (d1, d2) = (dims.d1, dims.d2);
    let mut out = ComplexMatrix::zeros(d2, d2);
    for j in 0..d2 {
        for jp in 0..d2 {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d1 {
                acc += x[(dims.index(i, j), dims.index(i, jp))];
            }
            out[(j, jp)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::random::random_matrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::projector(&[
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
        ])
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let d = ComplexMatrix::from_real_diagonal(&[3.0, 5.0]);
        assert_eq!(kron(&d, &i2), ComplexMatrix::from_real_diagonal(&[3.0, 3.0, 5.0, 5.0]));
        let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let k = kron(&p0, &p1);
        assert_eq!(k, ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn bell_marginals_are_half_identity() {
        let dims = DimensionPair::new(2, 2).unwrap();
        let half = ComplexMatrix::identity(2).scale(0.5);
        let r1 = partial_trace_over_2(&bell(), dims).unwrap();
        let r2 = partial_trace_over_1(&bell(), dims).unwrap();
        assert!(r1.max_abs_diff(&half) < 1e-15);
        assert!(r2.max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn identity_partial_trace() {
        let dims = DimensionPair::new(2, 2).unwrap();
        let t = partial_trace_over_2(&ComplexMatrix::identity(4), dims).unwrap();
        assert_eq!(t, ComplexMatrix::identity(2).scale(2.0));
    }

    #[test]
    fn product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (d1, d2) in [(2, 2), (2, 3), (3, 2), (1, 4)] {
            let dims = DimensionPair::new(d1, d2).unwrap();
            let a = random_matrix(&mut rng, d1, d1);
            let b = random_matrix(&mut rng, d2, d2);
            let ab = kron(&a, &b);
            let t2 = partial_trace_over_2(&ab, dims).unwrap();
            let t1 = partial_trace_over_1(&ab, dims).unwrap();
            assert!(t2.max_abs_diff(&a.scale_complex(b.trace())) < 1e-12);
            assert!(t1.max_abs_diff(&b.scale_complex(a.trace())) < 1e-12);
            assert!((t2.trace() - ab.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let dims = DimensionPair::new(2, 3).unwrap();
        let err = partial_trace_over_2(&ComplexMatrix::identity(4), dims).unwrap_err();
        assert!(matches!(
            err,
            LinalgError::ShapeMismatch {
                expected: (6, 6),
                found: (4, 4)
            }
        ));
        assert!(DimensionPair::new(0, 2).is_err());
    }

    proptest! {
        #[test]
        fn partial_trace_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = DimensionPair::new(2, 3).unwrap();
            let x = random_matrix(&mut rng, 6, 6);
            let y = random_matrix(&mut rng, 6, 6);
            let combo = &x.scale(alpha) + &y.scale(beta);
            for trace in [partial_trace_over_1, partial_trace_over_2] {
                let lhs = trace(&combo, dims).unwrap();
                let rhs = &trace(&x, dims).unwrap().scale(alpha) + &trace(&y, dims).unwrap().scale(beta);
                prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }

        #[test]
        fn kron_mixed_product(seed in any::<u64>(), d in 2usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, d, d);
            let b = random_matrix(&mut rng, d, d);
            let c = random_matrix(&mut rng, d, d);
            let e = random_matrix(&mut rng, d, d);
            let lhs = &kron(&a, &b) * &kron(&c, &e);
            let rhs = kron(&(&a * &c), &(&b * &e));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
