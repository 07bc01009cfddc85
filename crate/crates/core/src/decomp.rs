//! Block decomposition of a positive semidefinite matrix.
//!
//! For `ρ ⪰ 0` of order `n` and rank `k` there is a basis permutation `σ`
//! with
//!
//! ```text
//! σ ρ σ⁻¹ = [[K, KA], [A†K, A†KA]] = [I; A†] K [I | A],   K ≻ 0 of order k.
//! ```
//!
//! The permutation is found by greedy pivoted Cholesky: repeatedly take the
//! index with the largest remaining Schur-complement diagonal (ties go to the
//! lowest index) and stop once that diagonal falls below `tol` times the
//! largest original diagonal. The pivots, in pick order, come first; the
//! remaining indices follow in ascending order.

use thiserror::Error;

use crate::numcore::{eigh, ComplexMatrix, HermitianMatrix, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is numerically zero; there is no leading block")]
    ZeroMatrix,
    #[error(
        "leading block is numerically singular (λ_min/λ_max = {ratio:e}); tolerance is inconsistent with the pivots"
    )]
    SingularLeadingBlock { ratio: f64 },
    #[error("not a permutation of 0..{n}: {map:?}")]
    InvalidPermutation { n: usize, map: Vec<usize> },
    #[error("pivot set is invalid: {0}")]
    InvalidPivots(String),
    #[error("block shapes do not fit together: {0}")]
    Shape(String),
}

/// Basis permutation, `map[new] = old`.
///
/// Conjugation is fixed as `(σ M σ⁻¹)(i, j) = M(map[i], map[j])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, DecompError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(DecompError::InvalidPermutation { n, map });
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `σ M σ⁻¹`.
    pub fn conjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.select(&self.map, &self.map)
    }

    /// `σ⁻¹ M σ`.
    pub fn unconjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let n = self.map.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.map[i], self.map[j])] = m[(i, j)];
            }
        }
        out
    }
}

/// `(σ, k, K, A)` with `σ ρ σ⁻¹ = [[K, KA], [A†K, A†KA]]`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    perm: Permutation,
    leading: HermitianMatrix,
    coupling: ComplexMatrix,
}

impl BlockDecomposition {
    /// Assembles a decomposition from its parts; `coupling` must be
    /// `k × (n − k)` where `k` is the order of `leading`.
    pub fn from_parts(
        perm: Permutation,
        leading: HermitianMatrix,
        coupling: ComplexMatrix,
    ) -> Result<Self, DecompError> {
        let n = perm.len();
        let k = leading.order();
        if k > n || coupling.rows() != k || coupling.cols() != n - k {
            return Err(DecompError::Shape(format!(
                "n = {n}, K is {k}x{k}, A is {}x{}",
                coupling.rows(),
                coupling.cols()
            )));
        }
        Ok(Self {
            perm,
            leading,
            coupling,
        })
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    /// `k`, the rank.
    pub fn rank(&self) -> usize {
        self.leading.order()
    }

    /// `n`, the order of the decomposed matrix.
    pub fn order(&self) -> usize {
        self.perm.len()
    }

    /// `K`.
    pub fn leading(&self) -> &HermitianMatrix {
        &self.leading
    }

    /// `A`, of shape `k × (n − k)`.
    pub fn coupling(&self) -> &ComplexMatrix {
        &self.coupling
    }

    /// `[I_k | A]`, a `k × n` matrix in permuted coordinates.
    pub fn compression(&self) -> ComplexMatrix {
        let k = self.rank();
        ComplexMatrix::from_fn(k, self.order(), |i, j| {
            if j < k {
                if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            } else {
                self.coupling[(i, j - k)]
            }
        })
    }

    /// `σ⁻¹ [I; A†]`, an `n × k` matrix whose columns span the range of `ρ`.
    pub fn range_factor(&self) -> ComplexMatrix {
        let f = self.compression().adjoint();
        let n = self.order();
        let mut out = ComplexMatrix::zeros(n, self.rank());
        for i in 0..n {
            for j in 0..self.rank() {
                out[(self.perm.map[i], j)] = f[(i, j)];
            }
        }
        out
    }

    /// `σ⁻¹ [[L, LA], [A†L, A†LA]] σ` for hermitian `L` of order `k`.
    pub fn lift(&self, l: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(l.order(), self.rank(), "lift expects an order-k matrix");
        l.congruence(&self.range_factor())
    }

    /// `[I | A] σ X σ⁻¹ [I; A†]` for an `n × n` operator `X`.
    pub fn compress(&self, x: &ComplexMatrix) -> HermitianMatrix {
        let y = self.perm.conjugate(x);
        let f = self.compression();
        HermitianMatrix::symmetrized(&(&(&f * &y) * &f.adjoint())).expect("square")
    }

    /// Rebuilds `ρ = σ⁻¹ [[K, KA], [A†K, A†KA]] σ`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        self.lift(&self.leading)
    }
}

/// Greedy pivoted-Cholesky pivot order for a PSD matrix.
pub fn select_pivots(rho: &HermitianMatrix, tol: f64) -> Result<Vec<usize>, DecompError> {
    check_psd(rho, tol)?;
    Ok(pivoted_cholesky(rho, tol))
}

fn check_psd(rho: &HermitianMatrix, tol: f64) -> Result<(), DecompError> {
    let e = eigh(rho);
    let floor = -tol * e.max_abs().max(1.0);
    if e.min() < floor {
        return Err(DecompError::NotPsd {
            min_eigenvalue: e.min(),
        });
    }
    Ok(())
}

fn pivoted_cholesky(rho: &HermitianMatrix, tol: f64) -> Vec<usize> {
    let n = rho.order();
    let mut diag: Vec<f64> = (0..n).map(|i| rho[(i, i)].re).collect();
    let top = diag.iter().copied().fold(0.0, f64::max);
    let stop = tol * top;
    // factor[i][s]: column s of the partial Cholesky factor, row i
    let mut factor: Vec<Vec<C64>> = vec![Vec::new(); n];
    let mut pivots = Vec::new();
    let mut used = vec![false; n];

    if top <= 0.0 {
        return pivots;
    }
    loop {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !used[i] && best.is_none_or(|b| diag[i] > diag[b]) {
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        if diag[p] <= stop {
            break;
        }
        used[p] = true;
        pivots.push(p);
        let root = diag[p].sqrt();
        let fp = factor[p].clone();
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = rho[(i, p)];
            for (a, b) in factor[i].iter().zip(&fp) {
                v -= a * b.conj();
            }
            let v = v / root;
            diag[i] -= v.norm_sqr();
            factor[i].push(v);
        }
        factor[p].push(C64::new(root, 0.0));
    }
    pivots
}

/// Decomposes `rho` with the greedy pivot order of [`select_pivots`].
pub fn block_decompose(rho: &HermitianMatrix, tol: f64) -> Result<BlockDecomposition, DecompError> {
    let pivots = select_pivots(rho, tol)?;
    if pivots.is_empty() {
        return Err(DecompError::ZeroMatrix);
    }
    decompose_on(rho, &pivots, tol)
}

/// Decomposes `rho` using a caller-chosen pivot set. The leading block
/// `ρ[pivots, pivots]` must be nonsingular and `pivots.len()` must equal the
/// rank, otherwise the reconstruction will not match.
pub fn block_decompose_with_pivots(
    rho: &HermitianMatrix,
    pivots: &[usize],
    tol: f64,
) -> Result<BlockDecomposition, DecompError> {
    check_psd(rho, tol)?;
    if pivots.is_empty() {
        return Err(DecompError::InvalidPivots("empty pivot set".into()));
    }
    decompose_on(rho, pivots, tol)
}

fn decompose_on(rho: &HermitianMatrix, pivots: &[usize], tol: f64) -> Result<BlockDecomposition, DecompError> {
    let n = rho.order();
    let k = pivots.len();
    let mut map = pivots.to_vec();
    let mut taken = vec![false; n];
    for &p in pivots {
        if p >= n || std::mem::replace(&mut taken[p], true) {
            return Err(DecompError::InvalidPivots(format!("{pivots:?} for order {n}")));
        }
    }
    map.extend((0..n).filter(|&i| !taken[i]));
    let perm = Permutation::new(map)?;

    let permuted = perm.conjugate(rho);
    let leading = HermitianMatrix::symmetrized(&permuted.submatrix(0, k, 0, k)).expect("square");
    let spectrum = eigh(&leading);
    let ratio = spectrum.min() / spectrum.max();
    if !(spectrum.min() > 0.0 && ratio > tol) {
        return Err(DecompError::SingularLeadingBlock { ratio });
    }
    let off = permuted.submatrix(0, k, k, n);
    let coupling = cholesky_solve(&leading, &off).ok_or(DecompError::SingularLeadingBlock { ratio })?;
    BlockDecomposition::from_parts(perm, leading, coupling)
}

/// Solves `K X = B` for hermitian positive definite `K`.
fn cholesky_solve(k: &HermitianMatrix, b: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = k.order();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = k[(j, j)].re;
        for t in 0..j {
            d -= l[(j, t)].norm_sqr();
        }
        if d <= 0.0 {
            return None;
        }
        let root = d.sqrt();
        l[(j, j)] = C64::new(root, 0.0);
        for i in j + 1..n {
            let mut v = k[(i, j)];
            for t in 0..j {
                v -= l[(i, t)] * l[(j, t)].conj();
            }
            l[(i, j)] = v / root;
        }
    }
    let mut x = b.clone();
    for c in 0..b.cols() {
        // L y = b
        for i in 0..n {
            let mut v = x[(i, c)];
            for t in 0..i {
                v -= l[(i, t)] * x[(t, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
        // L† x = y
        for i in (0..n).rev() {
            let mut v = x[(i, c)];
            for t in i + 1..n {
                v -= l[(t, i)].conj() * x[(t, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::random::{random_density, random_hermitian};
    use crate::numcore::rank_eps;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> HermitianMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        HermitianMatrix::projector(&[c(h), c(0.0), c(0.0), c(h)])
    }

    #[test]
    fn pivots_for_diagonal_and_bell() {
        let d = HermitianMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(select_pivots(&d, TOL).unwrap(), vec![0, 3]);
        let mixed = HermitianMatrix::identity(4).scale(0.25);
        assert_eq!(select_pivots(&mixed, TOL).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(select_pivots(&bell(), TOL).unwrap(), vec![0]);
    }

    #[test]
    fn pivots_reject_indefinite_input() {
        let h = HermitianMatrix::from_real_diagonal(&[1.0, -0.1]);
        assert!(matches!(select_pivots(&h, TOL), Err(DecompError::NotPsd { .. })));
    }

    #[test]
    fn diagonal_decomposition() {
        let d = HermitianMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        let dec = block_decompose(&d, TOL).unwrap();
        assert_eq!(dec.perm().map(), &[0, 3, 1, 2]);
        assert_eq!(dec.rank(), 2);
        assert!(dec.leading().max_abs_diff(&HermitianMatrix::identity(2).scale(0.5)) < 1e-15);
        assert_eq!(dec.coupling().rows(), 2);
        assert_eq!(dec.coupling().cols(), 2);
        assert_eq!(dec.coupling().max_abs(), 0.0);
    }

    #[test]
    fn bell_decomposition() {
        let dec = block_decompose(&bell(), TOL).unwrap();
        assert_eq!(dec.rank(), 1);
        assert!((dec.leading()[(0, 0)].re - 0.5).abs() < 1e-15);
        let a = dec.coupling();
        assert_eq!((a.rows(), a.cols()), (1, 3));
        assert!((a[(0, 0)].norm() + a[(0, 1)].norm()) < 1e-15);
        assert!((a[(0, 2)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn full_rank_has_empty_coupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&mut rng, 5, 5);
        let dec = block_decompose(&rho, TOL).unwrap();
        assert_eq!(dec.rank(), 5);
        assert_eq!(dec.coupling().cols(), 0);
        assert!(dec.reconstruct().max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn reconstruct_from_parts() {
        let one = BlockDecomposition::from_parts(
            Permutation::identity(1),
            HermitianMatrix::identity(1),
            ComplexMatrix::zeros(1, 0),
        )
        .unwrap();
        assert_eq!(one.reconstruct(), HermitianMatrix::identity(1));

        let a = ComplexMatrix::from_rows(&[vec![c(0.0), c(0.0), c(1.0)]]).unwrap();
        let dec =
            BlockDecomposition::from_parts(Permutation::identity(4), HermitianMatrix::from_real_diagonal(&[0.5]), a)
                .unwrap();
        let want = HermitianMatrix::projector(&[c(1.0), c(0.0), c(0.0), c(1.0)]).scale(0.5);
        assert!(dec.reconstruct().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn bad_parts_rejected() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let bad = BlockDecomposition::from_parts(
            Permutation::identity(3),
            HermitianMatrix::identity(1),
            ComplexMatrix::zeros(1, 1),
        );
        assert!(matches!(bad, Err(DecompError::Shape(_))));
    }

    #[test]
    fn zero_matrix_is_an_error() {
        assert!(matches!(
            block_decompose(&HermitianMatrix::zeros(3), TOL),
            Err(DecompError::ZeroMatrix)
        ));
    }

    #[test]
    fn singular_pivot_choice_is_rejected() {
        // indices 0 and 3 of the Bell projector are linearly dependent
        let err = block_decompose_with_pivots(&bell(), &[0, 3], TOL).unwrap_err();
        assert!(matches!(err, DecompError::SingularLeadingBlock { .. }));
    }

    #[test]
    fn permutation_conjugation_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_hermitian(&mut rng, 4);
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let pm = p.conjugate(&m);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(pm[(i, j)], m[(p.map()[i], p.map()[j])]);
            }
        }
        assert_eq!(p.unconjugate(&pm), *m.as_matrix());
    }

    #[test]
    fn range_factor_spans_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n, k) in [(4, 2), (6, 3), (9, 4)] {
            let rho = random_density(&mut rng, n, k);
            let dec = block_decompose(&rho, TOL).unwrap();
            assert_eq!(dec.rank(), rank_eps(&rho, TOL));
            let f = dec.range_factor();
            let q = crate::numcore::random::orthonormalize_columns(&f).unwrap();
            let proj_dec = &q * &q.adjoint();
            let e = eigh(&rho);
            let s = e.vectors.submatrix(0, n, n - k, n);
            let proj_eig = &s * &s.adjoint();
            assert!(proj_dec.max_abs_diff(&proj_eig) < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip(seed in any::<u64>(), n in 1usize..8, r in 1usize..8) {
            let k = r.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&mut rng, n, k);
            let dec = block_decompose(&rho, TOL).unwrap();
            prop_assert_eq!(dec.rank(), k);
            let back = dec.reconstruct();
            prop_assert!(back.max_abs_diff(&rho) <= 1e-8 * rho.max_abs().max(1.0));
            prop_assert_eq!(rank_eps(&back, TOL), dec.rank());
            let spec = eigh(dec.leading());
            prop_assert!(spec.min() > TOL * spec.max());
        }
    }
}
