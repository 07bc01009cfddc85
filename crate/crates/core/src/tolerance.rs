/// Two-tier numerical tolerances.
///
/// `rank` governs every rank, positivity and span decision (relative to the
/// largest eigenvalue or singular value). `membership` governs max-norm
/// checks of hermiticity, trace and marginals; it is the looser of the two so
/// that states rebuilt from a decomposition re-validate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rank: f64,
    pub membership: f64,
}

impl Tolerances {
    pub const DEFAULT_RANK: f64 = 1e-9;
    pub const DEFAULT_MEMBERSHIP: f64 = 1e-8;

    /// Rank tolerance `tol`, membership tolerance `10·tol`.
    pub fn from_rank(tol: f64) -> Self {
        Self {
            rank: tol,
            membership: 10.0 * tol,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: Self::DEFAULT_RANK,
            membership: Self::DEFAULT_MEMBERSHIP,
        }
    }
}
