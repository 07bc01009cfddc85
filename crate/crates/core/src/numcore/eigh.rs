//! Cyclic Jacobi eigensolver for dense hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot entry and then applies
//! the classical real Jacobi rotation, so the work stays in `O(n)` per pair and
//! the accumulated eigenvector matrix remains unitary to rounding.

use super::matrix::{ComplexMatrix, HermitianMatrix, C64};

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `H = V diag(values) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue modulus, i.e. the spectral norm.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `V f(diag) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let diag: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        HermitianMatrix::from_real_diagonal(&diag).congruence(&self.vectors)
    }
}

/// Hermitian eigendecomposition. Cyclic Jacobi converges quadratically; the
/// sweep cap is never reached for the matrix orders this crate handles.
pub fn eigh(h: &HermitianMatrix) -> Eigh {
    let n = h.order();
    let mut a = h.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();

    if total > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            if off <= f64::EPSILON * 1e-2 * total {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q, total);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Eigh { values, vectors }
}

pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    eigh(h).values
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[(i, j)].norm_sqr();
        }
    }
    (2.0 * s).sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, total: f64) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g <= f64::MIN_POSITIVE || g <= 1e-300 * total {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / g;

    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = Φ R Φ† with Φ = diag(1, conj(phase)) on (p, q):
    // J_pp = c, J_pq = s·phase, J_qp = −s·conj(phase), J_qq = c.
    let jpq = phase * s;
    let jqp = -phase.conj() * s;
    let n = a.rows();

    // A ← A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * jqp;
        a[(k, q)] = akp * jpq + akq * c;
    }
    // A ← J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * jqp.conj();
        a[(q, k)] = apk * jpq.conj() + aqk * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    // V ← V J
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * c;
    }
}
