//! Two qubits with both marginals `½I`.
//!
//! The extreme points of `C(½I, ½I)` are exactly the maximally entangled
//! pure states `|Ω⟩ = (|0⟩|ψ₀⟩ + |1⟩|ψ₁⟩)/√2` with `{ψ₀, ψ₁}` orthonormal.
//! This module builds those states, the general rank-2 member of the set,
//! and random generators used to test both directions of that statement.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use thiserror::Error;

use crate::numcore::random::random_unitary;
use crate::numcore::{eigh, is_psd, rank_eps, ComplexMatrix, DimensionPair, HermitianMatrix, C64};
use crate::state::CoupledState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QubitError {
    #[error("coefficient matrix must be 2x2, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("coefficient matrix is not unitary (‖u†u − I‖_max = {defect:e})")]
    NotUnitary { defect: f64 },
}

const UNITARY_TOL: f64 = 1e-10;

fn two_qubits() -> DimensionPair {
    DimensionPair::new(2, 2).expect("non-empty")
}

/// The unitary `u` with `|ψ_x⟩ = Σ_y u_xy |y⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntangledSpec {
    u: ComplexMatrix,
}

impl MaxEntangledSpec {
    pub fn new(u: ComplexMatrix) -> Result<Self, QubitError> {
        if u.rows() != 2 || u.cols() != 2 {
            return Err(QubitError::Shape {
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        let defect = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(2));
        if defect > UNITARY_TOL {
            return Err(QubitError::NotUnitary { defect });
        }
        Ok(Self { u })
    }

    /// Haar-random basis `{ψ₀, ψ₁}`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            u: random_unitary(rng, 2),
        }
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.u
    }

    /// Amplitudes of `|Ω⟩` in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn amplitudes(&self) -> [C64; 4] {
        let s = FRAC_1_SQRT_2;
        [
            self.u[(0, 0)] * s,
            self.u[(0, 1)] * s,
            self.u[(1, 0)] * s,
            self.u[(1, 1)] * s,
        ]
    }
}

/// `|Ω⟩⟨Ω|` for `|Ω⟩ = (|0⟩|ψ₀⟩ + |1⟩|ψ₁⟩)/√2`.
pub fn max_entangled(spec: &MaxEntangledSpec) -> CoupledState {
    CoupledState::from_hermitian(two_qubits(), HermitianMatrix::projector(&spec.amplitudes())).expect("4x4 projector")
}

/// Rank one, positive, and both marginals `½I` within `tol`.
pub fn is_max_entangled(rho: &CoupledState, tol: f64) -> bool {
    if rho.dims() != two_qubits() {
        return false;
    }
    let half = HermitianMatrix::identity(2).scale(0.5);
    let h = rho.hermitian();
    rho.matrix().hermiticity_defect() <= tol
        && is_psd(&h, tol)
        && rank_eps(&h, tol) == 1
        && rho.marginal1().max_abs_diff(&half) <= tol
        && rho.marginal2().max_abs_diff(&half) <= tol
}

/// Parameters of the general hermitian 4×4 matrix with both marginals `½I`:
///
/// ```text
/// [ a/2    x      y      z   ]
/// [ x̄    (1−a)/2  t     −y   ]
/// [ ȳ      t̄   (1−a)/2  −x   ]
/// [ z̄     −ȳ     −x̄     a/2  ]
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitRank2Params {
    pub a: f64,
    pub x: C64,
    pub y: C64,
    pub z: C64,
    pub t: C64,
}

#[derive(Clone, Debug)]
pub struct Rank2Kernel {
    pub matrix: HermitianMatrix,
    /// PSD and of rank exactly two.
    pub valid: bool,
}

impl Rank2Kernel {
    pub fn state(&self) -> CoupledState {
        CoupledState::from_hermitian(two_qubits(), self.matrix.clone()).expect("4x4")
    }
}

pub fn rank2_kernel(p: &QubitRank2Params, tol: f64) -> Rank2Kernel {
    let QubitRank2Params { a, x, y, z, t } = *p;
    let r = |v: f64| C64::new(v, 0.0);
    let rows = [
        vec![r(a / 2.0), x, y, z],
        vec![x.conj(), r((1.0 - a) / 2.0), t, -y],
        vec![y.conj(), t.conj(), r((1.0 - a) / 2.0), -x],
        vec![z.conj(), -y.conj(), -x.conj(), r(a / 2.0)],
    ];
    let m = ComplexMatrix::from_rows(&rows).expect("4x4");
    let matrix = HermitianMatrix::symmetrized(&m).expect("square");
    let valid = is_psd(&matrix, tol) && rank_eps(&matrix, tol) == 2;
    Rank2Kernel { matrix, valid }
}

/// Draws parameters whose kernel is PSD of rank two.
///
/// Takes `K = [[a/2, x], [x̄, (1−a)/2]] ≻ 0` and sets the off-diagonal block
/// `[[y, z], [t, −y]] = √d K^{1/2} U K^{−1/2}` with `d = det K` and `U` a
/// traceless unitary (a phase times a reflection `n·σ`). This makes the lower
/// block equal to `A†KA = d K⁻¹`, which is what the kernel prescribes.
pub fn random_rank2_params<R: Rng + ?Sized>(rng: &mut R) -> QubitRank2Params {
    let a: f64 = rng.random_range(0.05..0.95);
    let x_max = (a * (1.0 - a)).sqrt() / 2.0;
    let x = C64::from_polar(
        x_max * rng.random_range(0.0f64..0.95).sqrt(),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    let k = HermitianMatrix::symmetrized(
        &ComplexMatrix::from_rows(&[
            vec![C64::new(a / 2.0, 0.0), x],
            vec![x.conj(), C64::new((1.0 - a) / 2.0, 0.0)],
        ])
        .expect("2x2"),
    )
    .expect("square");
    let d = a * (1.0 - a) / 4.0 - x.norm_sqr();
    let spectrum = eigh(&k);
    let k_half = spectrum.apply(f64::sqrt);
    let k_neg_half = spectrum.apply(|v| 1.0 / v.sqrt());

    let n = unit_vector3(rng);
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let reflection = ComplexMatrix::from_rows(&[
        vec![C64::new(n[2], 0.0), C64::new(n[0], -n[1])],
        vec![C64::new(n[0], n[1]), C64::new(-n[2], 0.0)],
    ])
    .expect("2x2");
    let u = reflection.scale_complex(phase);
    let b = (&(k_half.as_matrix() * &u) * k_neg_half.as_matrix()).scale(d.sqrt());
    QubitRank2Params {
        a,
        x,
        y: b[(0, 0)],
        z: b[(0, 1)],
        t: b[(1, 0)],
    }
}

fn unit_vector3<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

/// Which diagonal 2×2 block is assumed strictly positive in
/// [`saturated_params`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositiveBlock {
    /// `|z| < a/2`, `t` unconstrained.
    Outer,
    /// `|t| < (1−a)/2`, `z` unconstrained.
    Inner,
}

/// Parameters with `|x|² = |y|² = a(1−a)/4` and one of the blocks
/// `[[a/2, z], [z̄, a/2]]`, `[[(1−a)/2, t], [t̄, (1−a)/2]]` strictly
/// positive. No such parameters give a PSD kernel of rank two.
pub fn saturated_params<R: Rng + ?Sized>(rng: &mut R, case: PositiveBlock) -> QubitRank2Params {
    let tau = std::f64::consts::TAU;
    let a: f64 = loop {
        let a = rng.random::<f64>();
        if a > 0.0 {
            break a;
        }
    };
    let r = (a * (1.0 - a)).sqrt() / 2.0;
    let x = C64::from_polar(r, rng.random_range(0.0..tau));
    let y = C64::from_polar(r, rng.random_range(0.0..tau));
    let free = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.5;
    let (z, t) = match case {
        PositiveBlock::Outer => (
            C64::from_polar(a / 2.0 * rng.random::<f64>(), rng.random_range(0.0..tau)),
            free,
        ),
        PositiveBlock::Inner => (
            free,
            C64::from_polar((1.0 - a) / 2.0 * rng.random::<f64>(), rng.random_range(0.0..tau)),
        ),
    };
    QubitRank2Params { a, x, y, z, t }
}

/// `λ|Ω₁⟩⟨Ω₁| + (1−λ)|Ω₂⟩⟨Ω₂|` for two Haar-random maximally entangled
/// states and `λ ∈ (0.1, 0.9)`, redrawn until the rank is two.
pub fn random_rank2_member<R: Rng + ?Sized>(rng: &mut R) -> CoupledState {
    loop {
        let first = max_entangled(&MaxEntangledSpec::random(rng));
        let second = max_entangled(&MaxEntangledSpec::random(rng));
        let lambda = rng.random_range(0.1..0.9);
        let m = &first.matrix().scale(lambda) + &second.matrix().scale(1.0 - lambda);
        let h = HermitianMatrix::symmetrized(&m).expect("square");
        if rank_eps(&h, 1e-9) == 2 {
            return CoupledState::from_hermitian(two_qubits(), h).expect("4x4");
        }
    }
}
