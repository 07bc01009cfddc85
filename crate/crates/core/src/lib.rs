//! Extreme points of the convex set of bipartite quantum states with fixed
//! marginals.
//!
//! A state `ρ` on `H₁ ⊗ H₂` with marginals `(ρ₁, ρ₂)` is permuted into the
//! block form `[[K, KA], [A†K, A†KA]]` with `K ≻ 0` of order `k = rank ρ`
//! ([`decomp`]). It is an extreme point exactly when the compressions
//! `[I|A] σ(X₁⊗I + I⊗X₂)σ⁻¹ [I; A†]` span every hermitian `k × k` matrix
//! ([`certifier`]). When they do not, any hermitian `L` orthogonal to that
//! span gives two distinct members of the set averaging to `ρ`.
//!
//! Index convention: `e_i ⊗ f_j` sits at position `i·d2 + j`.

pub mod certifier;
pub mod decomp;
pub mod numcore;
pub mod qubit;
pub mod sampler;
pub mod state;
pub mod tolerance;

pub use certifier::{check_extremal, ExtremalityVerdict, MarginalPair};
pub use state::CoupledState;
pub use tolerance::Tolerances;
