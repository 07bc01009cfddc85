//! Extremality certification in `C(ρ₁, ρ₂)`.
//!
//! Given a member `ρ` of rank `k` with block decomposition `(σ, K, A)`, a
//! hermitian perturbation `L` of order `k` lifts to
//! `σ⁻¹ [I; A†] L [I | A] σ`, which stays inside the face of `ρ`. The lift
//! has vanishing marginals exactly when `L` is orthogonal (under
//! `⟨X, Y⟩ = Tr XY`) to every compression
//! `[I | A] σ (X₁⊗I + I⊗X₂) σ⁻¹ [I; A†]`. Call the real span of those
//! compressions `D`. Then `ρ` is extremal iff `D` is all of the `k²`-dimensional
//! space of hermitian `k × k` matrices, and any nonzero `L ∈ D⊥` yields
//! `ρ = ½(ρ⁺ + ρ⁻)` with `ρ± = lift(K ± εL)`.
//!
//! Since `X₁ = I` and `X₂ = I` give the same compression, `dim D ≤ d₁² + d₂² − 1`,
//! which bounds the rank of any extreme point by `√(d₁² + d₂² − 1)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use thiserror::Error;

use crate::decomp::{block_decompose, BlockDecomposition, DecompError};
use crate::numcore::{
    eigh, hermitian_basis, is_psd, kron, partial_trace_over_1, partial_trace_over_2, rank_eps, spectral_norm,
    unvec_hermitian, vec_hermitian, ComplexMatrix, DimensionPair, HermitianMatrix, JacobiSvd, LinalgError, C64,
};
use crate::state::CoupledState;
use crate::tolerance::Tolerances;

/// Smallest max-norm gap accepted between the two witness states.
pub const WITNESS_SEPARATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Decomposition(#[from] DecompError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("marginal {which} is invalid: {reason}")]
    InvalidMarginal { which: u8, reason: String },
    #[error("state is not a member of C(ρ₁, ρ₂): {0}")]
    NotInC(Violation),
    #[error("direction is not marginal-free: relative leak {leak:e}")]
    InvalidDirection { leak: f64 },
    #[error("perturbation direction is zero")]
    DegenerateDirection,
}

/// The two prescribed marginal states.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalPair {
    rho1: HermitianMatrix,
    rho2: HermitianMatrix,
}

impl MarginalPair {
    /// Checks that each marginal is PSD and has unit trace within `tol`.
    pub fn new(rho1: HermitianMatrix, rho2: HermitianMatrix, tol: f64) -> Result<Self, CertifyError> {
        for (which, m) in [(1u8, &rho1), (2, &rho2)] {
            if m.order() == 0 {
                return Err(CertifyError::InvalidMarginal {
                    which,
                    reason: "empty matrix".into(),
                });
            }
            if !is_psd(m, tol) {
                return Err(CertifyError::InvalidMarginal {
                    which,
                    reason: format!("not positive semidefinite (λ_min = {:e})", eigh(m).min()),
                });
            }
            let tr = m.real_trace();
            if (tr - 1.0).abs() > tol {
                return Err(CertifyError::InvalidMarginal {
                    which,
                    reason: format!("trace {tr} differs from 1"),
                });
            }
        }
        Ok(Self { rho1, rho2 })
    }

    /// The marginals a state actually has.
    pub fn of_state(state: &CoupledState) -> Self {
        Self {
            rho1: state.marginal1(),
            rho2: state.marginal2(),
        }
    }

    /// `(I/d₁, I/d₂)`.
    pub fn maximally_mixed(dims: DimensionPair) -> Self {
        Self {
            rho1: HermitianMatrix::identity(dims.d1()).scale(1.0 / dims.d1() as f64),
            rho2: HermitianMatrix::identity(dims.d2()).scale(1.0 / dims.d2() as f64),
        }
    }

    pub fn rho1(&self) -> &HermitianMatrix {
        &self.rho1
    }

    pub fn rho2(&self) -> &HermitianMatrix {
        &self.rho2
    }

    pub fn dims(&self) -> DimensionPair {
        DimensionPair::new(self.rho1.order(), self.rho2.order()).expect("validated non-empty")
    }

    /// When either marginal is pure the set is the single point `ρ₁ ⊗ ρ₂`.
    pub fn is_singleton(&self, rank_tol: f64) -> bool {
        rank_eps(&self.rho1, rank_tol) == 1 || rank_eps(&self.rho2, rank_tol) == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Shape,
    NotHermitian,
    NotPsd,
    Trace,
    Marginal1,
    Marginal2,
}

impl ViolationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationKind::Shape => "shape mismatch",
            ViolationKind::NotHermitian => "hermiticity violation",
            ViolationKind::NotPsd => "positivity violation",
            ViolationKind::Trace => "trace mismatch",
            ViolationKind::Marginal1 => "marginal-1 mismatch",
            ViolationKind::Marginal2 => "marginal-2 mismatch",
        }
    }
}

/// First failed membership condition and by how much it failed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, magnitude {}", self.kind.as_str(), self.magnitude)
    }
}

/// Checks hermiticity, positivity, unit trace and both marginals, in that
/// order, each within `tol` in max-norm.
pub fn validate_membership(rho: &CoupledState, marginals: &MarginalPair, tol: f64) -> Result<(), Violation> {
    let dims = rho.dims();
    if marginals.rho1.order() != dims.d1() || marginals.rho2.order() != dims.d2() {
        return Err(Violation {
            kind: ViolationKind::Shape,
            magnitude: f64::INFINITY,
        });
    }
    let defect = rho.matrix().hermiticity_defect();
    if defect > tol {
        return Err(Violation {
            kind: ViolationKind::NotHermitian,
            magnitude: defect,
        });
    }
    let h = rho.hermitian();
    if !is_psd(&h, tol) {
        return Err(Violation {
            kind: ViolationKind::NotPsd,
            magnitude: -eigh(&h).min(),
        });
    }
    let trace_gap = (h.real_trace() - 1.0).abs();
    if trace_gap > tol {
        return Err(Violation {
            kind: ViolationKind::Trace,
            magnitude: trace_gap,
        });
    }
    let gap1 = rho.marginal1().max_abs_diff(&marginals.rho1);
    if gap1 > tol {
        return Err(Violation {
            kind: ViolationKind::Marginal1,
            magnitude: gap1,
        });
    }
    let gap2 = rho.marginal2().max_abs_diff(&marginals.rho2);
    if gap2 > tol {
        return Err(Violation {
            kind: ViolationKind::Marginal2,
            magnitude: gap2,
        });
    }
    Ok(())
}

/// How a verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// A pure marginal (or `n = 1`) forces `C = {ρ₁ ⊗ ρ₂}`.
    SingletonSet,
    /// Nonsingular members are never extremal; a product of traceless
    /// operators is a marginal-free direction.
    FullRank,
    /// Rank of the space `D`.
    DSpace,
}

#[derive(Clone, Debug)]
pub struct PerturbationSpaceReport {
    pub k: usize,
    /// `d₁² + d₂²` compressions, `X₁` terms first.
    pub generators: Vec<HermitianMatrix>,
    pub dim_d: usize,
    pub k_squared: usize,
    pub dperp_dim: usize,
    pub route: Route,
}

/// `[I | A] σ (X ⊗ I) σ⁻¹ [I; A†]` over the hermitian basis of `H₁`, then the
/// same for `I ⊗ X` over `H₂`.
pub fn perturbation_generators(
    dec: &BlockDecomposition,
    dims: DimensionPair,
) -> Result<Vec<HermitianMatrix>, CertifyError> {
    if dec.order() != dims.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: dims.n(),
            found: dec.order(),
        }
        .into());
    }
    let id1 = ComplexMatrix::identity(dims.d1());
    let id2 = ComplexMatrix::identity(dims.d2());
    let mut out = Vec::with_capacity(dims.d1().pow(2) + dims.d2().pow(2));
    for x in hermitian_basis(dims.d1()) {
        out.push(dec.compress(&kron(&x, &id2)));
    }
    for x in hermitian_basis(dims.d2()) {
        out.push(dec.compress(&kron(&id1, &x)));
    }
    Ok(out)
}

/// Real dimension of the span `D` of `generators` and an orthonormal basis of
/// its orthogonal complement among hermitian matrices of order `order`.
#[derive(Clone, Debug)]
pub struct DSpaceRank {
    pub dim_d: usize,
    pub dperp_basis: Vec<HermitianMatrix>,
}

pub fn d_space_rank(order: usize, generators: &[HermitianMatrix], rel_tol: f64) -> Result<DSpaceRank, CertifyError> {
    let rows: Vec<Vec<f64>> = generators
        .iter()
        .map(|g| {
            if g.order() != order {
                Err(LinalgError::DimensionMismatch {
                    expected: order,
                    found: g.order(),
                })
            } else {
                Ok(vec_hermitian(g))
            }
        })
        .collect::<Result<_, _>>()?;
    let svd = JacobiSvd::from_rows(&rows, order * order);
    let dim_d = svd.rank(rel_tol);
    let dperp_basis = svd
        .nullspace(rel_tol)
        .iter()
        .map(|v| unvec_hermitian(v, order))
        .collect::<Result<_, _>>()?;
    Ok(DSpaceRank { dim_d, dperp_basis })
}

/// Everything the D-space route computes, without any shortcut.
#[derive(Clone, Debug)]
pub struct DSpaceAnalysis {
    pub decomposition: BlockDecomposition,
    pub report: PerturbationSpaceReport,
    pub dperp_basis: Vec<HermitianMatrix>,
}

/// Decomposes `rho` and computes `dim D` and a basis of `D⊥`. Does not check
/// membership.
pub fn analyze_d_space(rho: &CoupledState, tol: &Tolerances) -> Result<DSpaceAnalysis, CertifyError> {
    let decomposition = block_decompose(&rho.hermitian(), tol.rank)?;
    let generators = perturbation_generators(&decomposition, rho.dims())?;
    let k = decomposition.rank();
    let ranked = d_space_rank(k, &generators, tol.rank)?;
    Ok(DSpaceAnalysis {
        report: PerturbationSpaceReport {
            k,
            generators,
            dim_d: ranked.dim_d,
            k_squared: k * k,
            dperp_dim: ranked.dperp_basis.len(),
            route: Route::DSpace,
        },
        decomposition,
        dperp_basis: ranked.dperp_basis,
    })
}

/// `ρ = ½(ρ⁺ + ρ⁻)` with `ρ⁺ ≠ ρ⁻` both in `C(ρ₁, ρ₂)`.
#[derive(Clone, Debug)]
pub struct NonExtremalityWitness {
    /// Order-`k` hermitian direction in the decomposition's coordinates.
    pub direction: HermitianMatrix,
    pub epsilon: f64,
    pub rho_plus: CoupledState,
    pub rho_minus: CoupledState,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum WitnessDefect {
    #[error("½(ρ⁺ + ρ⁻) differs from ρ by {0:e}")]
    Average(f64),
    #[error("ρ⁺ is not in C(ρ₁, ρ₂): {0}")]
    PlusNotInC(Violation),
    #[error("ρ⁻ is not in C(ρ₁, ρ₂): {0}")]
    MinusNotInC(Violation),
    #[error("ρ⁺ and ρ⁻ coincide (gap {0:e})")]
    NotDistinct(f64),
    #[error("dimensions of the witness states do not match ρ")]
    Shape,
}

impl NonExtremalityWitness {
    /// Re-checks every witness claim against `rho` and the marginals.
    pub fn verify(&self, rho: &CoupledState, marginals: &MarginalPair, tol: f64) -> Result<(), WitnessDefect> {
        if self.rho_plus.dims() != rho.dims() || self.rho_minus.dims() != rho.dims() {
            return Err(WitnessDefect::Shape);
        }
        let avg = (self.rho_plus.matrix() + self.rho_minus.matrix()).scale(0.5);
        let gap = avg.max_abs_diff(rho.matrix());
        if gap > tol * rho.matrix().max_abs().max(1.0) {
            return Err(WitnessDefect::Average(gap));
        }
        validate_membership(&self.rho_plus, marginals, tol).map_err(WitnessDefect::PlusNotInC)?;
        validate_membership(&self.rho_minus, marginals, tol).map_err(WitnessDefect::MinusNotInC)?;
        let sep = self.rho_plus.matrix().max_abs_diff(self.rho_minus.matrix());
        if sep <= WITNESS_SEPARATION {
            return Err(WitnessDefect::NotDistinct(sep));
        }
        Ok(())
    }
}

/// Splits `rho` along `direction ∈ D⊥`:
/// `ρ± = σ⁻¹ [I; A†](K ± εL)[I | A] σ` with `ε = ½ λ_min(K) / ‖L‖₂`, so both
/// `K ± εL` stay positive definite with a factor-two margin.
pub fn make_witness(
    rho: &CoupledState,
    dec: &BlockDecomposition,
    direction: &HermitianMatrix,
    tol: &Tolerances,
) -> Result<NonExtremalityWitness, CertifyError> {
    let dims = rho.dims();
    if direction.order() != dec.rank() {
        return Err(LinalgError::DimensionMismatch {
            expected: dec.rank(),
            found: direction.order(),
        }
        .into());
    }
    if direction.frobenius_norm() <= f64::MIN_POSITIVE {
        return Err(CertifyError::DegenerateDirection);
    }
    let lifted = dec.lift(direction);
    let leak = partial_trace_over_2(&lifted, dims)?
        .max_abs()
        .max(partial_trace_over_1(&lifted, dims)?.max_abs());
    let rel_leak = leak / lifted.max_abs();
    if rel_leak > tol.membership {
        return Err(CertifyError::InvalidDirection { leak: rel_leak });
    }
    let epsilon = 0.5 * eigh(dec.leading()).min() / spectral_norm(direction);
    let plus = dec.lift(&dec.leading().add_scaled(epsilon, direction));
    let minus = dec.lift(&dec.leading().add_scaled(-epsilon, direction));
    Ok(NonExtremalityWitness {
        direction: direction.clone(),
        epsilon,
        rho_plus: CoupledState::from_hermitian(dims, plus)?,
        rho_minus: CoupledState::from_hermitian(dims, minus)?,
    })
}

#[derive(Clone, Debug)]
pub enum ExtremalityVerdict {
    Extremal {
        report: PerturbationSpaceReport,
    },
    NotExtremal {
        witness: NonExtremalityWitness,
        report: PerturbationSpaceReport,
    },
    NotInC {
        violation: Violation,
    },
}

impl ExtremalityVerdict {
    pub fn is_extremal(&self) -> bool {
        matches!(self, ExtremalityVerdict::Extremal { .. })
    }

    pub fn report(&self) -> Option<&PerturbationSpaceReport> {
        match self {
            ExtremalityVerdict::Extremal { report } | ExtremalityVerdict::NotExtremal { report, .. } => Some(report),
            ExtremalityVerdict::NotInC { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&NonExtremalityWitness> {
        match self {
            ExtremalityVerdict::NotExtremal { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ExtremalityVerdict::Extremal { .. } => "extremal",
            ExtremalityVerdict::NotExtremal { .. } => "not_extremal",
            ExtremalityVerdict::NotInC { .. } => "not_in_c",
        }
    }
}

/// Decides whether `rho` is an extreme point of `C(ρ₁, ρ₂)`.
///
/// Membership is validated first (a failure is the `NotInC` verdict, not an
/// error). A pure marginal makes the set a singleton; a nonsingular member is
/// split along `L₁ ⊗ L₂` with traceless `L₁, L₂`; everything else goes
/// through the rank of `D`.
pub fn check_extremal(
    rho: &CoupledState,
    marginals: &MarginalPair,
    tol: &Tolerances,
) -> Result<ExtremalityVerdict, CertifyError> {
    if let Err(violation) = validate_membership(rho, marginals, tol.membership) {
        return Ok(ExtremalityVerdict::NotInC { violation });
    }
    let dims = rho.dims();

    if dims.n() == 1 || marginals.is_singleton(tol.rank) {
        let dec = block_decompose(&rho.hermitian(), tol.rank)?;
        let k = dec.rank();
        let generators = perturbation_generators(&dec, dims)?;
        return Ok(ExtremalityVerdict::Extremal {
            report: PerturbationSpaceReport {
                k,
                generators,
                dim_d: k * k,
                k_squared: k * k,
                dperp_dim: 0,
                route: Route::SingletonSet,
            },
        });
    }

    let dec = block_decompose(&rho.hermitian(), tol.rank)?;
    if dec.rank() == dims.n() {
        return full_rank_verdict(rho, dec, tol);
    }

    let analysis = analyze_d_space(rho, tol)?;
    let DSpaceAnalysis {
        decomposition,
        report,
        dperp_basis,
    } = analysis;
    match dperp_basis.first() {
        None => Ok(ExtremalityVerdict::Extremal { report }),
        Some(direction) => {
            let witness = make_witness(rho, &decomposition, direction, tol)?;
            Ok(ExtremalityVerdict::NotExtremal { witness, report })
        }
    }
}

/// Normalized traceless `(E₀₀ − E₁₁)/√2` of order `d ≥ 2`.
fn traceless_direction(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(0, 0)] = C64::new(FRAC_1_SQRT_2, 0.0);
    m[(1, 1)] = C64::new(-FRAC_1_SQRT_2, 0.0);
    m
}

fn full_rank_verdict(
    rho: &CoupledState,
    dec: BlockDecomposition,
    tol: &Tolerances,
) -> Result<ExtremalityVerdict, CertifyError> {
    let dims = rho.dims();
    let product = kron(&traceless_direction(dims.d1()), &traceless_direction(dims.d2()));
    // With k = n the lift is plain unconjugation, so conjugate to get L.
    let direction = HermitianMatrix::symmetrized(&dec.perm().conjugate(&product))?;
    let witness = make_witness(rho, &dec, &direction, tol)?;
    let k = dec.rank();
    // The compression is a unitary conjugation here, so D is isometric to
    // {X₁⊗I + I⊗X₂}, of dimension d₁² + d₂² − 1.
    let dim_d = dims.d1().pow(2) + dims.d2().pow(2) - 1;
    Ok(ExtremalityVerdict::NotExtremal {
        witness,
        report: PerturbationSpaceReport {
            k,
            generators: perturbation_generators(&dec, dims)?,
            dim_d,
            k_squared: k * k,
            dperp_dim: k * k - dim_d,
            route: Route::FullRank,
        },
    })
}

/// Independent check on an orthonormal eigenbasis `S` of the range of `ρ`:
/// `ρ` is extremal iff the only hermitian `L` with `Tr₁(S L S†) = 0` and
/// `Tr₂(S L S†) = 0` is `L = 0`.
pub fn oracle_extremal(rho: &CoupledState, marginals: &MarginalPair, tol: &Tolerances) -> Result<bool, CertifyError> {
    validate_membership(rho, marginals, tol.membership).map_err(CertifyError::NotInC)?;
    let dims = rho.dims();
    let n = dims.n();
    let e = eigh(&rho.hermitian());
    let cut = tol.rank * e.max_abs().max(1.0);
    let support: Vec<usize> = (0..n).filter(|&j| e.values[j].abs() > cut).collect();
    let k = support.len();
    let s = e.vectors.select(&(0..n).collect::<Vec<_>>(), &support);

    let mut columns = Vec::with_capacity(k * k);
    for b in hermitian_basis(k) {
        let z = b.congruence(&s);
        let mut col = vec_hermitian(&HermitianMatrix::symmetrized(&partial_trace_over_2(&z, dims)?)?);
        col.extend(vec_hermitian(&HermitianMatrix::symmetrized(&partial_trace_over_1(
            &z, dims,
        )?)?));
        columns.push(col);
    }
    let m = dims.d1().pow(2) + dims.d2().pow(2);
    let rows: Vec<Vec<f64>> = (0..m).map(|r| columns.iter().map(|c| c[r]).collect()).collect();
    let svd = JacobiSvd::from_rows(&rows, k * k);
    Ok(svd.rank(tol.rank) == k * k)
}

/// `⌊√(d₁² + d₂² − 1)⌋`, the largest rank an extreme point can have.
pub fn rank_bound(dims: DimensionPair) -> usize {
    let target = dims.d1().pow(2) + dims.d2().pow(2) - 1;
    let mut r = (target as f64).sqrt() as usize;
    while r * r > target {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= target {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::block_decompose_with_pivots;
    use crate::numcore::random::{random_density, random_unitary};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn dims(d1: usize, d2: usize) -> DimensionPair {
        DimensionPair::new(d1, d2).unwrap()
    }

    fn bell_state(sign: f64) -> CoupledState {
        let h = FRAC_1_SQRT_2;
        CoupledState::from_hermitian(
            dims(2, 2),
            HermitianMatrix::projector(&[c(h), c(0.0), c(0.0), c(sign * h)]),
        )
        .unwrap()
    }

    fn half_half() -> MarginalPair {
        MarginalPair::maximally_mixed(dims(2, 2))
    }

    fn mix(a: &CoupledState, b: &CoupledState, w: f64) -> CoupledState {
        CoupledState::new(a.dims(), &a.matrix().scale(w) + &b.matrix().scale(1.0 - w)).unwrap()
    }

    /// A random member of `C(Tr₂ρ, Tr₁ρ)` of the given rank.
    fn random_member(rng: &mut ChaCha8Rng, d: DimensionPair, rank: usize) -> (CoupledState, MarginalPair) {
        let rho = CoupledState::from_hermitian(d, random_density(rng, d.n(), rank)).unwrap();
        let m = MarginalPair::of_state(&rho);
        (rho, m)
    }

    #[test]
    fn membership_examples() {
        let tol = Tolerances::default().membership;
        let r1 = HermitianMatrix::from_real_diagonal(&[0.3, 0.7]);
        let r2 = HermitianMatrix::from_real_diagonal(&[0.2, 0.5, 0.3]);
        let pair = MarginalPair::new(r1.clone(), r2.clone(), tol).unwrap();
        assert!(validate_membership(&CoupledState::product(&r1, &r2), &pair, tol).is_ok());
        assert!(validate_membership(&bell_state(1.0), &half_half(), tol).is_ok());

        let zero_zero =
            CoupledState::from_hermitian(dims(2, 2), HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]))
                .unwrap();
        let v = validate_membership(&zero_zero, &half_half(), tol).unwrap_err();
        assert_eq!(v.kind, ViolationKind::Marginal1);
        assert!((v.magnitude - 0.5).abs() < 1e-15);
        assert_eq!(v.to_string(), "marginal-1 mismatch, magnitude 0.5");
    }

    #[test]
    fn membership_reports_each_kind() {
        let tol = 1e-8;
        let mut skew = bell_state(1.0).matrix().clone();
        skew[(0, 1)] = c(0.1);
        let s = CoupledState::new(dims(2, 2), skew).unwrap();
        assert_eq!(
            validate_membership(&s, &half_half(), tol).unwrap_err().kind,
            ViolationKind::NotHermitian
        );

        let neg = CoupledState::from_hermitian(dims(2, 2), HermitianMatrix::from_real_diagonal(&[0.6, -0.1, 0.0, 0.5]))
            .unwrap();
        assert_eq!(
            validate_membership(&neg, &half_half(), tol).unwrap_err().kind,
            ViolationKind::NotPsd
        );

        let big = CoupledState::from_hermitian(dims(2, 2), HermitianMatrix::identity(4).scale(0.5)).unwrap();
        assert_eq!(
            validate_membership(&big, &half_half(), tol).unwrap_err().kind,
            ViolationKind::Trace
        );

        let wrong = MarginalPair::maximally_mixed(dims(2, 3));
        assert_eq!(
            validate_membership(&big, &wrong, tol).unwrap_err().kind,
            ViolationKind::Shape
        );

        let r2 = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        let m = MarginalPair::new(HermitianMatrix::identity(2).scale(0.5), r2, tol).unwrap();
        assert_eq!(
            validate_membership(&bell_state(1.0), &m, tol).unwrap_err().kind,
            ViolationKind::Marginal2
        );
    }

    #[test]
    fn marginal_pair_validation() {
        let bad = MarginalPair::new(
            HermitianMatrix::from_real_diagonal(&[1.2, -0.2]),
            HermitianMatrix::identity(2).scale(0.5),
            1e-8,
        );
        assert!(matches!(bad, Err(CertifyError::InvalidMarginal { which: 1, .. })));
        let bad = MarginalPair::new(
            HermitianMatrix::identity(2).scale(0.5),
            HermitianMatrix::identity(2),
            1e-8,
        );
        assert!(matches!(bad, Err(CertifyError::InvalidMarginal { which: 2, .. })));
    }

    #[test]
    fn bell_generator_is_two() {
        let dec = block_decompose(&bell_state(1.0).hermitian(), 1e-9).unwrap();
        let gens = perturbation_generators(&dec, dims(2, 2)).unwrap();
        assert_eq!(gens.len(), 8);
        // X₁ = E₀₀ compresses to Y₁₁ = 1 alone; X₁ = I is E₀₀ + E₁₁.
        let identity_generator = gens[0].add(&gens[1]);
        assert!((identity_generator[(0, 0)] - c(2.0)).norm() < 1e-15);
        let ranked = d_space_rank(1, &gens, 1e-9).unwrap();
        assert_eq!(ranked.dim_d, 1);
        assert!(ranked.dperp_basis.is_empty());
    }

    #[test]
    fn full_rank_generators_are_permuted_operators() {
        let rho = CoupledState::from_hermitian(dims(2, 2), HermitianMatrix::identity(4).scale(0.25)).unwrap();
        let dec = block_decompose(&rho.hermitian(), 1e-9).unwrap();
        let gens = perturbation_generators(&dec, dims(2, 2)).unwrap();
        let basis = hermitian_basis(2);
        for (g, x) in gens.iter().zip(&basis) {
            let want = dec.perm().conjugate(&kron(x, &ComplexMatrix::identity(2)));
            assert!(g.max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn generator_span_never_exceeds_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (d1, d2) in [(2, 2), (2, 3), (3, 3)] {
            let d = dims(d1, d2);
            let (rho, _) = random_member(&mut rng, d, d.n());
            let dec = block_decompose(&rho.hermitian(), 1e-9).unwrap();
            let gens = perturbation_generators(&dec, d).unwrap();
            assert_eq!(gens.len(), d1 * d1 + d2 * d2);
            let ranked = d_space_rank(dec.rank(), &gens, 1e-9).unwrap();
            assert_eq!(ranked.dim_d, d1 * d1 + d2 * d2 - 1);
        }
    }

    #[test]
    fn d_space_rank_trivial_cases() {
        let full = d_space_rank(3, &hermitian_basis(3), 1e-9).unwrap();
        assert_eq!(full.dim_d, 9);
        assert!(full.dperp_basis.is_empty());
        let id = d_space_rank(2, &[HermitianMatrix::identity(2)], 1e-9).unwrap();
        assert_eq!(id.dim_d, 1);
        assert_eq!(id.dperp_basis.len(), 3);
        for l in &id.dperp_basis {
            assert!(l.real_trace().abs() < 1e-14);
        }
        assert!(d_space_rank(2, &[HermitianMatrix::identity(3)], 1e-9).is_err());
    }

    #[test]
    fn verdict_examples() {
        let tol = Tolerances::default();
        let bell = check_extremal(&bell_state(1.0), &half_half(), &tol).unwrap();
        assert!(bell.is_extremal());
        assert_eq!(bell.report().unwrap().dim_d, 1);

        let mixed = CoupledState::from_hermitian(dims(2, 2), HermitianMatrix::identity(4).scale(0.25)).unwrap();
        let v = check_extremal(&mixed, &half_half(), &tol).unwrap();
        assert_eq!(v.tag(), "not_extremal");
        assert_eq!(v.report().unwrap().route, Route::FullRank);
        v.witness()
            .unwrap()
            .verify(&mixed, &half_half(), tol.membership)
            .unwrap();

        let rank2 = mix(&bell_state(1.0), &bell_state(-1.0), 0.5);
        let v = check_extremal(&rank2, &half_half(), &tol).unwrap();
        let report = v.report().unwrap();
        assert_eq!((report.k, report.route), (2, Route::DSpace));
        assert!(report.dim_d < 4);
        assert_eq!(report.dim_d + report.dperp_dim, report.k_squared);
        v.witness()
            .unwrap()
            .verify(&rank2, &half_half(), tol.membership)
            .unwrap();
    }

    #[test]
    fn not_in_c_verdict() {
        let zero_zero =
            CoupledState::from_hermitian(dims(2, 2), HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]))
                .unwrap();
        let v = check_extremal(&zero_zero, &half_half(), &Tolerances::default()).unwrap();
        assert!(matches!(v, ExtremalityVerdict::NotInC { violation } if violation.kind == ViolationKind::Marginal1));
        assert!(matches!(
            oracle_extremal(&zero_zero, &half_half(), &Tolerances::default()),
            Err(CertifyError::NotInC(_))
        ));
    }

    #[test]
    fn singleton_sets() {
        let tol = Tolerances::default();
        let pure = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let r2 = HermitianMatrix::from_real_diagonal(&[0.2, 0.3, 0.5]);
        let rho = CoupledState::product(&pure, &r2);
        let pair = MarginalPair::new(pure, r2, tol.membership).unwrap();
        let v = check_extremal(&rho, &pair, &tol).unwrap();
        assert!(v.is_extremal());
        assert_eq!(v.report().unwrap().route, Route::SingletonSet);
        assert!(oracle_extremal(&rho, &pair, &tol).unwrap());

        // d₁ = 1: the state is its own second marginal
        let one = HermitianMatrix::identity(1);
        let r2 = HermitianMatrix::from_real_diagonal(&[0.5, 0.5]);
        let rho = CoupledState::product(&one, &r2);
        let pair = MarginalPair::new(one, r2, tol.membership).unwrap();
        assert!(check_extremal(&rho, &pair, &tol).unwrap().is_extremal());
        assert!(oracle_extremal(&rho, &pair, &tol).unwrap());
    }

    #[test]
    fn witness_direction_must_be_marginal_free() {
        let tol = Tolerances::default();
        let rank2 = mix(&bell_state(1.0), &bell_state(-1.0), 0.5);
        let dec = block_decompose(&rank2.hermitian(), tol.rank).unwrap();
        let err = make_witness(&rank2, &dec, &HermitianMatrix::identity(2), &tol).unwrap_err();
        assert!(matches!(err, CertifyError::InvalidDirection { .. }));
        let err = make_witness(&rank2, &dec, &HermitianMatrix::zeros(2), &tol).unwrap_err();
        assert_eq!(err, CertifyError::DegenerateDirection);
    }

    #[test]
    fn witness_is_homogeneous_in_direction() {
        let tol = Tolerances::default();
        let rank2 = mix(&bell_state(1.0), &bell_state(-1.0), 0.3);
        let analysis = analyze_d_space(&rank2, &tol).unwrap();
        let l = &analysis.dperp_basis[0];
        let w1 = make_witness(&rank2, &analysis.decomposition, l, &tol).unwrap();
        let w2 = make_witness(&rank2, &analysis.decomposition, &l.scale(2.0), &tol).unwrap();
        assert!((w1.epsilon - 2.0 * w2.epsilon).abs() < 1e-15);
        assert!(w1.rho_plus.matrix().max_abs_diff(w2.rho_plus.matrix()) < 1e-14);
        assert!(w1.rho_minus.matrix().max_abs_diff(w2.rho_minus.matrix()) < 1e-14);
    }

    #[test]
    fn full_rank_witness_with_product_direction() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (rho, pair) = random_member(&mut rng, dims(2, 3), 6);
        let v = check_extremal(&rho, &pair, &tol).unwrap();
        let w = v.witness().unwrap();
        w.verify(&rho, &pair, tol.membership).unwrap();
        // the lifted direction is exactly σ_z-like ⊗ σ_z-like, up to scale
        let diff = w.rho_plus.matrix() - w.rho_minus.matrix();
        let product = kron(&traceless_direction(2), &traceless_direction(3));
        let ratio = diff[(0, 0)] / product[(0, 0)];
        assert!(diff.max_abs_diff(&product.scale_complex(ratio)) < 1e-12);
    }

    #[test]
    fn rank_bounds() {
        assert_eq!(rank_bound(dims(2, 2)), 2);
        assert_eq!(rank_bound(dims(3, 3)), 4);
        assert_eq!(rank_bound(dims(2, 3)), 3);
        for d in 1..10 {
            assert_eq!(rank_bound(dims(1, d)), d);
        }
    }

    #[test]
    fn full_rank_shortcut_agrees_with_d_space() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (d1, d2) in [(2, 2), (2, 3), (3, 3)] {
            let (rho, _) = random_member(&mut rng, dims(d1, d2), d1 * d2);
            let analysis = analyze_d_space(&rho, &tol).unwrap();
            assert!(analysis.report.dim_d < analysis.report.k_squared);
            assert_eq!(analysis.report.dim_d, d1 * d1 + d2 * d2 - 1);
        }
    }

    #[test]
    fn verdicts_match_oracle_and_satisfy_bound() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..60 {
            let (d1, d2) = [(2, 2), (2, 3), (3, 3)][trial % 3];
            let d = dims(d1, d2);
            let rank = rng.random_range(1..=d.n());
            let (rho, pair) = random_member(&mut rng, d, rank);
            let v = check_extremal(&rho, &pair, &tol).unwrap();
            assert_eq!(
                v.is_extremal(),
                oracle_extremal(&rho, &pair, &tol).unwrap(),
                "{d:?} rank {rank}"
            );
            match &v {
                ExtremalityVerdict::Extremal { report } => {
                    assert_eq!(report.dim_d, report.k_squared);
                    assert!(report.k * report.k < d1 * d1 + d2 * d2);
                }
                ExtremalityVerdict::NotExtremal { witness, .. } => {
                    witness.verify(&rho, &pair, tol.membership).unwrap();
                }
                ExtremalityVerdict::NotInC { violation } => panic!("member rejected: {violation}"),
            }
        }
    }

    #[test]
    fn local_unitary_covariance() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for trial in 0..30 {
            let d = dims(2, 3);
            let rank = 1 + trial % 5;
            let (rho, pair) = random_member(&mut rng, d, rank);
            let u1 = random_unitary(&mut rng, 2);
            let u2 = random_unitary(&mut rng, 3);
            let u = kron(&u1, &u2);
            let rotated = CoupledState::from_hermitian(d, rho.hermitian().congruence(&u)).unwrap();
            let rotated_pair =
                MarginalPair::new(pair.rho1().congruence(&u1), pair.rho2().congruence(&u2), tol.membership).unwrap();
            let a = check_extremal(&rho, &pair, &tol).unwrap();
            let b = check_extremal(&rotated, &rotated_pair, &tol).unwrap();
            assert_eq!(a.tag(), b.tag());
        }
    }

    #[test]
    fn d_space_dimension_ignores_pivot_choice() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..20 {
            let (d1, d2) = [(2, 2), (2, 3), (3, 3)][trial % 3];
            let d = dims(d1, d2);
            let rank = rng.random_range(1..d.n());
            let (rho, _) = random_member(&mut rng, d, rank);
            let h = rho.hermitian();
            let reference = analyze_d_space(&rho, &tol).unwrap().report.dim_d;

            for _ in 0..3 {
                let mut order: Vec<usize> = (0..d.n()).collect();
                order.shuffle(&mut rng);
                let mut pivots: Vec<usize> = Vec::new();
                for i in order {
                    let mut trial_set = pivots.clone();
                    trial_set.push(i);
                    let block = HermitianMatrix::symmetrized(&h.select(&trial_set, &trial_set)).unwrap();
                    let e = eigh(&block);
                    if e.min() > 1e-6 * e.max() {
                        pivots = trial_set;
                    }
                    if pivots.len() == rank {
                        break;
                    }
                }
                let dec = block_decompose_with_pivots(&h, &pivots, tol.rank).unwrap();
                assert!(dec.reconstruct().max_abs_diff(&h) < 1e-8);
                let gens = perturbation_generators(&dec, d).unwrap();
                assert_eq!(d_space_rank(rank, &gens, tol.rank).unwrap().dim_d, reference);
            }
        }
    }
}
