//! Seeded random matrix generators. Callers own the RNG.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, HermitianMatrix, C64};

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(&random_matrix(rng, n, n)).expect("square")
}

/// Haar-distributed unitary: Gram–Schmidt on a complex Gaussian matrix.
/// Normalizing each column against its own projection fixes the phase
/// ambiguity of QR, which is what makes the result Haar.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let g = random_matrix(rng, n, n);
        if let Some(q) = orthonormalize_columns(&g) {
            return q;
        }
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass. `None` when the
/// columns are numerically dependent.
pub fn orthonormalize_columns(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (n, k) = (g.rows(), g.cols());
    let mut cols: Vec<Vec<C64>> = (0..k).map(|j| g.column(j)).collect();
    for j in 0..k {
        let original = norm(&cols[j]);
        for _ in 0..2 {
            for p in 0..j {
                let proj: C64 = cols[p].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let (done, rest) = cols.split_at_mut(j);
                for (x, q) in rest[0].iter_mut().zip(&done[p]) {
                    *x -= proj * q;
                }
            }
        }
        let nrm = norm(&cols[j]);
        if nrm <= 1e-10 * original.max(f64::MIN_POSITIVE) {
            return None;
        }
        cols[j].iter_mut().for_each(|x| *x /= nrm);
    }
    Some(ComplexMatrix::from_fn(n, k, |i, j| cols[j][i]))
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `G G†` with `G` an `n × rank` complex Gaussian matrix (rank `rank` almost surely).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    let g = random_matrix(rng, n, rank);
    HermitianMatrix::symmetrized(&(&g * &g.adjoint())).expect("square")
}

/// Unit-trace [`random_psd`].
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    let p = random_psd(rng, n, rank);
    let tr = p.real_trace();
    p.scale(1.0 / tr)
}
