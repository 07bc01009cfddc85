//! Orthonormal basis of the real space of hermitian matrices and the matching
//! real coordinates.
//!
//! Both use the same ordering: the `d` diagonal units first, then for every
//! pair `i < j` (row-major) a symmetric and an antisymmetric element. Under
//! this ordering `vec_hermitian(hermitian_basis(d)[m])` is the `m`-th unit
//! vector, and `vec_hermitian` is an isometry from `⟨X,Y⟩ = Tr XY` to the
//! Euclidean inner product.

use std::f64::consts::SQRT_2;

use super::matrix::{ComplexMatrix, HermitianMatrix, C64};
use super::LinalgError;

/// The `d²` orthonormal hermitian matrices `E_ii`, `(E_ij+E_ji)/√2`,
/// `i(E_ij−E_ji)/√2`.
pub fn hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(i, i)] = C64::new(1.0, 0.0);
        out.push(HermitianMatrix::symmetrized(&m).expect("square"));
    }
    let h = 1.0 / SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(i, j)] = C64::new(h, 0.0);
            sym[(j, i)] = C64::new(h, 0.0);
            out.push(HermitianMatrix::symmetrized(&sym).expect("square"));

            // i(E_ij − E_ji)/√2 has entry (i,j) = i/√2, (j,i) = −i/√2.
            let mut anti = ComplexMatrix::zeros(d, d);
            anti[(i, j)] = C64::new(0.0, h);
            anti[(j, i)] = C64::new(0.0, -h);
            out.push(HermitianMatrix::symmetrized(&anti).expect("square"));
        }
    }
    out
}

/// Real coordinates `(M_ii)_i` then `(√2·Re M_ij, √2·Im M_ij)` for `i < j`.
pub fn vec_hermitian(m: &HermitianMatrix) -> Vec<f64> {
    let d = m.order();
    let mut out = Vec::with_capacity(d * d);
    out.extend((0..d).map(|i| m[(i, i)].re));
    for i in 0..d {
        for j in i + 1..d {
            let z = m[(i, j)];
            out.push(SQRT_2 * z.re);
            out.push(SQRT_2 * z.im);
        }
    }
    out
}

/// Inverse of [`vec_hermitian`].
pub fn unvec_hermitian(coords: &[f64], order: usize) -> Result<HermitianMatrix, LinalgError> {
    if coords.len() != order * order {
        return Err(LinalgError::DimensionMismatch {
            expected: order * order,
            found: coords.len(),
        });
    }
    let mut m = ComplexMatrix::zeros(order, order);
    for i in 0..order {
        m[(i, i)] = C64::new(coords[i], 0.0);
    }
    let mut pos = order;
    for i in 0..order {
        for j in i + 1..order {
            let z = C64::new(coords[pos], coords[pos + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            pos += 2;
        }
    }
    HermitianMatrix::symmetrized(&m)
}
