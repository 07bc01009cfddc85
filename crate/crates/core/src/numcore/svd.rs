//! One-sided (Hestenes) Jacobi SVD for small dense real matrices.
//!
//! All span, rank and nullspace questions in this crate are asked over the
//! reals in `vec_hermitian` coordinates, and they all go through here.
//! Nullspaces come out orthonormal even when the matrix has more columns than
//! rows.

const MAX_SWEEPS: usize = 80;

#[derive(Clone, Debug)]
pub struct JacobiSvd {
    nrows: usize,
    ncols: usize,
    /// Descending.
    sigma: Vec<f64>,
    /// Unit left singular vectors (length `nrows`), paired with `sigma`.
    left: Vec<Vec<f64>>,
    /// Unit right singular vectors (length `ncols`), paired with `sigma`.
    right: Vec<Vec<f64>>,
}

impl JacobiSvd {
    /// Decomposes the `rows.len() × ncols` matrix whose rows are given. Wide
    /// matrices are handled through their transpose so the Jacobi sweeps run
    /// over `min(rows, cols)` columns.
    pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Self {
        let m = rows.len();
        if m < ncols {
            // Gᵀ = U Σ Vᵀ  ⇒  G = V Σ Uᵀ
            let t = one_sided(rows.to_vec(), ncols);
            return Self {
                nrows: m,
                ncols,
                sigma: t.sigma,
                left: t.right,
                right: t.left,
            };
        }
        let cols: Vec<Vec<f64>> = (0..ncols).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let d = one_sided(cols, m);
        Self {
            nrows: m,
            ncols,
            sigma: d.sigma,
            left: d.left,
            right: d.right,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    fn cutoff(&self, rel_tol: f64) -> f64 {
        rel_tol * self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = self.cutoff(rel_tol);
        self.sigma.iter().filter(|&&s| s > cut && s > 0.0).count()
    }

    /// Orthonormal basis of the numerical nullspace: the trailing right
    /// singular vectors, or for wide matrices the orthogonal complement of the
    /// leading ones.
    pub fn nullspace(&self, rel_tol: f64) -> Vec<Vec<f64>> {
        let r = self.rank(rel_tol);
        if self.right.len() == self.ncols {
            return self.right[r..].to_vec();
        }
        complement(&self.right[..r], self.ncols)
    }

    /// Minimum-norm least-squares solution of `G x = b`, truncating singular
    /// values at `rel_tol · σ_max`.
    pub fn solve_least_squares(&self, b: &[f64], rel_tol: f64) -> Vec<f64> {
        assert_eq!(b.len(), self.nrows);
        let mut x = vec![0.0; self.ncols];
        for k in 0..self.rank(rel_tol) {
            let coef = dot(&self.left[k], b) / self.sigma[k];
            for (xi, vi) in x.iter_mut().zip(&self.right[k]) {
                *xi += coef * vi;
            }
        }
        x
    }
}

struct OneSided {
    sigma: Vec<f64>,
    /// Unit images `G v / σ` (zero when `σ = 0`), length `len`.
    left: Vec<Vec<f64>>,
    /// Rotation accumulator columns, length `cols.len()`.
    right: Vec<Vec<f64>>,
}

/// Orthogonalizes the given columns (each of length `len`) by plane rotations.
fn one_sided(mut w: Vec<Vec<f64>>, len: usize) -> OneSided {
    let p = w.len();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == 0.0 || gamma.abs() <= 4.0 * f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, i, j, c, s);
                rotate_pair(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|col| dot(col, col).sqrt()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    OneSided {
        sigma: order.iter().map(|&j| norms[j]).collect(),
        left: order
            .iter()
            .map(|&j| {
                if norms[j] > 0.0 {
                    w[j].iter().map(|x| x / norms[j]).collect()
                } else {
                    vec![0.0; len]
                }
            })
            .collect(),
        right: order.iter().map(|&j| v[j].clone()).collect(),
    }
}

/// Orthonormal basis of the complement of the span of the orthonormal
/// `basis`, by column-pivoted Gram–Schmidt on `I − BBᵀ`.
fn complement(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut c = vec![0.0; n];
            c[i] = 1.0;
            for b in basis {
                c.iter_mut().zip(b).for_each(|(x, y)| *x -= b[i] * y);
            }
            c
        })
        .collect();
    let want = n.saturating_sub(basis.len());
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(want);
    while out.len() < want {
        let (j, nrm) = cols
            .iter()
            .map(|c| dot(c, c).sqrt())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n > 0");
        if nrm <= 1e-8 {
            break;
        }
        let mut q: Vec<f64> = cols[j].iter().map(|x| x / nrm).collect();
        for b in basis.iter().chain(&out) {
            let p = dot(b, &q);
            q.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let qn = dot(&q, &q).sqrt();
        q.iter_mut().for_each(|x| *x /= qn);
        for c in cols.iter_mut() {
            let p = dot(&q, c);
            c.iter_mut().zip(&q).for_each(|(x, y)| *x -= p * y);
        }
        out.push(q);
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (a, b) = (&mut lo[i], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yi) = (*x, *y);
        *x = c * xi - s * yi;
        *y = s * xi + c * yi;
    }
}
