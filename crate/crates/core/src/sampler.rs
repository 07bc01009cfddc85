//! Members of `C(ρ₁, ρ₂)` and walks down to its extreme points.
//!
//! Interior members are `ρ₁ ⊗ ρ₂` plus a small hermitian perturbation with
//! vanishing marginals. A walk repeatedly picks a direction `L ∈ D⊥`, moves
//! `K + tL` to the boundary of the PSD cone and lifts the result back, which
//! keeps the marginals and drops the rank by at least one each time.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::certifier::{
    analyze_d_space, check_extremal, perturbation_generators, validate_membership, CertifyError, ExtremalityVerdict,
    MarginalPair, Violation,
};
use crate::decomp::block_decompose;
use crate::numcore::{
    eigh, hermitian_basis, kron, partial_trace_over_1, partial_trace_over_2, rank_eps, spectral_norm, unvec_hermitian,
    vec_hermitian, DimensionPair, HermitianMatrix, JacobiSvd, LinalgError,
};
use crate::state::CoupledState;
use crate::tolerance::Tolerances;

/// Marginal drift above which a walk step is corrected.
pub const DRIFT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error(
        "marginal {which} is singular (λ_min = {min_eigenvalue:e}); interior sampling needs positive definite \
         marginals, so supply a member of the set and run extremize from it instead"
    )]
    SingularMarginal { which: u8, min_eigenvalue: f64 },
    #[error("spread must lie in [0, 1), got {0}")]
    InvalidSpread(f64),
    #[error("K is not positive definite (λ_min = {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("direction does not reach the boundary (μ = {mu:e})")]
    Unbounded { mu: f64 },
    #[error("dimension mismatch: K has order {k}, L has order {l}")]
    OrderMismatch { k: usize, l: usize },
    #[error("starting state is not a member of C(ρ₁, ρ₂): {0}")]
    NotInC(Violation),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("walk failed after {} step(s): {reason}", trace.steps.len())]
    Walk {
        reason: WalkFailure,
        trace: Box<FacialWalkTrace>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkFailure {
    #[error("rank did not drop ({before} -> {after})")]
    NoRankDrop { before: usize, after: usize },
    #[error("marginals drifted: {0}")]
    Drift(Violation),
    #[error("no marginal-free direction although the state is not extremal")]
    NoDirection,
    #[error("step length: {0}")]
    Step(String),
}

/// Orthonormal basis of the hermitian `n × n` matrices with `Tr₁Δ = 0` and
/// `Tr₂Δ = 0`. Its size is `n² − d₁² − d₂² + 1`.
pub fn zero_marginal_basis(dims: DimensionPair) -> Vec<HermitianMatrix> {
    let n = dims.n();
    let columns: Vec<Vec<f64>> = hermitian_basis(n)
        .iter()
        .map(|b| {
            let mut col = vec_hermitian(&marginal_part(partial_trace_over_2(b, dims)));
            col.extend(vec_hermitian(&marginal_part(partial_trace_over_1(b, dims))));
            col
        })
        .collect();
    let m = dims.d1().pow(2) + dims.d2().pow(2);
    let rows: Vec<Vec<f64>> = (0..m).map(|r| columns.iter().map(|c| c[r]).collect()).collect();
    JacobiSvd::from_rows(&rows, n * n)
        .nullspace(1e-10)
        .iter()
        .map(|v| unvec_hermitian(v, n).expect("length n²"))
        .collect()
}

fn marginal_part(m: Result<crate::numcore::ComplexMatrix, LinalgError>) -> HermitianMatrix {
    HermitianMatrix::symmetrized(&m.expect("shape from dims")).expect("square")
}

/// Draws interior members `ρ₁ ⊗ ρ₂ + Δ` for fixed positive definite marginals.
#[derive(Clone, Debug)]
pub struct InteriorSampler {
    marginals: MarginalPair,
    product: HermitianMatrix,
    floor: f64,
    basis: Vec<HermitianMatrix>,
}

impl InteriorSampler {
    pub fn new(marginals: MarginalPair) -> Result<Self, SamplerError> {
        for (which, m) in [(1u8, marginals.rho1()), (2, marginals.rho2())] {
            let min = eigh(m).min();
            if min <= Tolerances::DEFAULT_RANK {
                return Err(SamplerError::SingularMarginal {
                    which,
                    min_eigenvalue: min,
                });
            }
        }
        let product = HermitianMatrix::symmetrized(&kron(marginals.rho1(), marginals.rho2()))?;
        let floor = eigh(&product).min();
        let basis = zero_marginal_basis(marginals.dims());
        Ok(Self {
            marginals,
            product,
            floor,
            basis,
        })
    }

    pub fn marginals(&self) -> &MarginalPair {
        &self.marginals
    }

    /// `ρ₁ ⊗ ρ₂ + Δ` with `Δ` a Gaussian combination of the zero-marginal
    /// basis, rescaled to `‖Δ‖₂ = spread · λ_min(ρ₁ ⊗ ρ₂)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Result<CoupledState, SamplerError> {
        if !(0.0..1.0).contains(&spread) {
            return Err(SamplerError::InvalidSpread(spread));
        }
        let dims = self.marginals.dims();
        let delta = random_combination(rng, &self.basis, self.product.order());
        let norm = spectral_norm(&delta);
        let rho = if norm > 0.0 && spread > 0.0 {
            self.product.add_scaled(spread * self.floor / norm, &delta)
        } else {
            self.product.clone()
        };
        Ok(CoupledState::from_hermitian(dims, rho)?)
    }
}

pub fn sample_interior<R: Rng + ?Sized>(
    marginals: &MarginalPair,
    rng: &mut R,
    spread: f64,
) -> Result<CoupledState, SamplerError> {
    InteriorSampler::new(marginals.clone())?.sample(rng, spread)
}

/// Gaussian coefficients over an orthonormal basis, normalized to unit
/// Frobenius norm. The zero matrix of `order` when the basis is empty.
fn random_combination<R: Rng + ?Sized>(rng: &mut R, basis: &[HermitianMatrix], order: usize) -> HermitianMatrix {
    let coeffs: Vec<f64> = basis.iter().map(|_| rng.sample(StandardNormal)).collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut out = HermitianMatrix::zeros(order);
    if norm == 0.0 {
        return out;
    }
    for (c, b) in coeffs.iter().zip(basis) {
        out = out.add_scaled(c / norm, b);
    }
    out
}

/// Largest `t` with `K + tL ⪰ 0`: `1/μ` for `μ = λ_max(−K^{−1/2} L K^{−1/2})`.
pub fn max_step(k: &HermitianMatrix, l: &HermitianMatrix, tol: f64) -> Result<f64, SamplerError> {
    if k.order() != l.order() {
        return Err(SamplerError::OrderMismatch {
            k: k.order(),
            l: l.order(),
        });
    }
    let spectrum = eigh(k);
    if spectrum.min() <= 0.0 {
        return Err(SamplerError::NotPositiveDefinite {
            min_eigenvalue: spectrum.min(),
        });
    }
    let whitened = l.congruence(&spectrum.apply(|v| 1.0 / v.sqrt()));
    let mu = -eigh(&whitened).min();
    if mu <= tol {
        return Err(SamplerError::Unbounded { mu });
    }
    Ok(1.0 / mu)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkStep {
    pub rank_before: usize,
    pub t_star: f64,
    pub rank_after: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacialWalkTrace {
    pub start_rank: usize,
    pub steps: Vec<WalkStep>,
    pub final_state: CoupledState,
}

/// Moves `rho` to an extreme point of `C(ρ₁, ρ₂)` by repeated boundary steps
/// along random marginal-free directions. Each step strictly lowers the rank,
/// so at most `n` steps are taken.
pub fn extremize<R: Rng + ?Sized>(
    rho: &CoupledState,
    marginals: &MarginalPair,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<FacialWalkTrace, SamplerError> {
    let dims = rho.dims();
    let mut trace = FacialWalkTrace {
        start_rank: rank_eps(&rho.hermitian(), tol.rank),
        steps: Vec::new(),
        final_state: rho.clone(),
    };
    let fail = |reason: WalkFailure, trace: &FacialWalkTrace| SamplerError::Walk {
        reason,
        trace: Box::new(trace.clone()),
    };

    loop {
        match check_extremal(&trace.final_state, marginals, tol)? {
            ExtremalityVerdict::Extremal { .. } => return Ok(trace),
            ExtremalityVerdict::NotInC { violation } if trace.steps.is_empty() => {
                return Err(SamplerError::NotInC(violation))
            }
            ExtremalityVerdict::NotInC { violation } => return Err(fail(WalkFailure::Drift(violation), &trace)),
            ExtremalityVerdict::NotExtremal { .. } => {}
        }

        let analysis = analyze_d_space(&trace.final_state, tol)?;
        let dec = &analysis.decomposition;
        let rank_before = dec.rank();
        if analysis.dperp_basis.is_empty() {
            return Err(fail(WalkFailure::NoDirection, &trace));
        }
        let direction = random_combination(rng, &analysis.dperp_basis, rank_before);
        let t_star = max_step(dec.leading(), &direction, tol.rank)
            .map_err(|e| fail(WalkFailure::Step(e.to_string()), &trace))?;

        let boundary = clamp_to_boundary(&dec.leading().add_scaled(t_star, &direction), tol.rank);
        let mut next = CoupledState::from_hermitian(dims, dec.lift(&boundary))?;
        if marginal_drift(&next, marginals) > DRIFT_THRESHOLD {
            next = reproject(&next, marginals, tol)?;
        }
        if let Err(v) = validate_membership(&next, marginals, tol.membership) {
            return Err(fail(WalkFailure::Drift(v), &trace));
        }
        let rank_after = rank_eps(&next.hermitian(), tol.rank);
        if rank_after >= rank_before {
            return Err(fail(
                WalkFailure::NoRankDrop {
                    before: rank_before,
                    after: rank_after,
                },
                &trace,
            ));
        }
        trace.steps.push(WalkStep {
            rank_before,
            t_star,
            rank_after,
        });
        trace.final_state = next;
    }
}

/// Zeroes the eigenvalues at or below `tol · max(1, max|λ|)`.
fn clamp_to_boundary(m: &HermitianMatrix, tol: f64) -> HermitianMatrix {
    let e = eigh(m);
    let cut = tol * e.max_abs().max(1.0);
    e.apply(|v| if v <= cut { 0.0 } else { v })
}

fn marginal_drift(rho: &CoupledState, marginals: &MarginalPair) -> f64 {
    rho.marginal1()
        .max_abs_diff(marginals.rho1())
        .max(rho.marginal2().max_abs_diff(marginals.rho2()))
}

/// Cancels marginal drift inside the face of `rho`: solves for the hermitian
/// `M` whose lift has marginals `(ρ₁, ρ₂) − (Tr₂ρ, Tr₁ρ)` in least squares
/// and returns `lift(K + M)`.
fn reproject(rho: &CoupledState, marginals: &MarginalPair, tol: &Tolerances) -> Result<CoupledState, SamplerError> {
    let dims = rho.dims();
    let dec = block_decompose(&rho.hermitian(), tol.rank).map_err(CertifyError::from)?;
    let rows: Vec<Vec<f64>> = perturbation_generators(&dec, dims)?.iter().map(vec_hermitian).collect();
    let mut rhs = vec_hermitian(&marginals.rho1().sub(&rho.marginal1()));
    rhs.extend(vec_hermitian(&marginals.rho2().sub(&rho.marginal2())));
    let k = dec.rank();
    let m = JacobiSvd::from_rows(&rows, k * k).solve_least_squares(&rhs, tol.rank);
    let correction = unvec_hermitian(&m, k)?;
    Ok(CoupledState::from_hermitian(
        dims,
        dec.lift(&dec.leading().add(&correction)),
    )?)
}
