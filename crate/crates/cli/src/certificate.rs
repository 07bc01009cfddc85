//! Machine-readable verdicts and their independent re-verification.

use extremal_core::certifier::{
    oracle_extremal, rank_bound, validate_membership, NonExtremalityWitness, Route, Violation,
};
use extremal_core::numcore::{rank_eps, DimensionPair, HermitianMatrix};
use extremal_core::{CoupledState, ExtremalityVerdict, MarginalPair, Tolerances};
use serde::{Deserialize, Serialize};

use crate::files::{matrix_from_json, matrix_to_json, JsonMatrix, SCHEMA};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancesJson {
    pub rank: f64,
    pub membership: f64,
}

impl From<&Tolerances> for TolerancesJson {
    fn from(t: &Tolerances) -> Self {
        Self {
            rank: t.rank,
            membership: t.membership,
        }
    }
}

impl From<TolerancesJson> for Tolerances {
    fn from(t: TolerancesJson) -> Self {
        Self {
            rank: t.rank,
            membership: t.membership,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    /// `L`, of order `rank`, in the block coordinates of the decomposition.
    pub direction: JsonMatrix,
    pub epsilon: f64,
    pub rho_plus: JsonMatrix,
    pub rho_minus: JsonMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationJson {
    pub kind: String,
    /// Absent when the violation has no finite size (shape mismatch).
    pub magnitude: Option<f64>,
    pub description: String,
}

impl From<&Violation> for ViolationJson {
    fn from(v: &Violation) -> Self {
        Self {
            kind: v.kind.as_str().to_string(),
            magnitude: v.magnitude.is_finite().then_some(v.magnitude),
            description: v.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema: String,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    pub d1: usize,
    pub d2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_squared: Option<usize>,
    pub rank_bound: usize,
    pub tolerances: TolerancesJson,
    pub rho1: JsonMatrix,
    pub rho2: JsonMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationJson>,
}

fn route_name(route: Route) -> &'static str {
    match route {
        Route::SingletonSet => "singleton_set",
        Route::FullRank => "full_rank",
        Route::DSpace => "d_space",
    }
}

impl CertificateFile {
    pub fn new(verdict: &ExtremalityVerdict, dims: DimensionPair, marginals: &MarginalPair, tol: &Tolerances) -> Self {
        let report = verdict.report();
        Self {
            schema: SCHEMA.to_string(),
            verdict: verdict.tag().to_string(),
            route: report.map(|r| route_name(r.route).to_string()),
            d1: dims.d1(),
            d2: dims.d2(),
            rank: report.map(|r| r.k),
            dim_d: report.map(|r| r.dim_d),
            k_squared: report.map(|r| r.k_squared),
            rank_bound: rank_bound(dims),
            tolerances: tol.into(),
            rho1: matrix_to_json(marginals.rho1()),
            rho2: matrix_to_json(marginals.rho2()),
            witness: verdict.witness().map(|w| WitnessJson {
                direction: matrix_to_json(&w.direction),
                epsilon: w.epsilon,
                rho_plus: matrix_to_json(w.rho_plus.matrix()),
                rho_minus: matrix_to_json(w.rho_minus.matrix()),
            }),
            violation: match verdict {
                ExtremalityVerdict::NotInC { violation } => Some(violation.into()),
                _ => None,
            },
        }
    }
}

fn fail(msg: impl Into<String>) -> CliError {
    CliError::Verification(msg.into())
}

/// Re-checks every claim in `cert` about `state`, using only the certificate's
/// own marginals and tolerances. Extremal claims are checked with the
/// eigenbasis test rather than the decomposition that produced them.
pub fn verify_certificate(cert: &CertificateFile, state: &CoupledState) -> Result<(), CliError> {
    if cert.schema != SCHEMA {
        return Err(fail(format!("unsupported schema {:?}", cert.schema)));
    }
    let dims = state.dims();
    if (cert.d1, cert.d2) != (dims.d1(), dims.d2()) {
        return Err(fail(format!(
            "certificate is for ({}, {}), state is ({}, {})",
            cert.d1,
            cert.d2,
            dims.d1(),
            dims.d2()
        )));
    }
    let tol: Tolerances = cert.tolerances.into();
    if !(tol.rank > 0.0 && tol.membership > 0.0) {
        return Err(fail("tolerances must be positive"));
    }
    if cert.rank_bound != rank_bound(dims) {
        return Err(fail(format!(
            "rank bound {} should be {}",
            cert.rank_bound,
            rank_bound(dims)
        )));
    }
    let r1 = matrix_from_json(&cert.rho1, dims.d1(), "rho1")?;
    let r2 = matrix_from_json(&cert.rho2, dims.d2(), "rho2")?;
    let to_h = |m| HermitianMatrix::symmetrized(&m).map_err(|e| fail(e.to_string()));
    let marginals = MarginalPair::new(to_h(r1)?, to_h(r2)?, tol.membership).map_err(|e| fail(e.to_string()))?;

    match cert.verdict.as_str() {
        "not_in_c" => {
            let claimed = cert
                .violation
                .as_ref()
                .ok_or_else(|| fail("not_in_c without violation"))?;
            match validate_membership(state, &marginals, tol.membership) {
                Ok(()) => Err(fail("state is a member, but the certificate says not_in_c")),
                Err(v) if v.kind.as_str() != claimed.kind => Err(fail(format!(
                    "violation is {:?}, certificate says {:?}",
                    v.kind.as_str(),
                    claimed.kind
                ))),
                Err(_) => Ok(()),
            }
        }
        "extremal" => {
            validate_membership(state, &marginals, tol.membership).map_err(|v| fail(format!("not a member: {v}")))?;
            let k = rank_eps(&state.hermitian(), tol.rank);
            if cert.rank != Some(k) {
                return Err(fail(format!("rank is {k}, certificate says {:?}", cert.rank)));
            }
            if cert.k_squared != Some(k * k) || cert.dim_d != Some(k * k) {
                return Err(fail("extremal requires dim_d = k_squared = rank²"));
            }
            if k > cert.rank_bound {
                return Err(fail(format!("rank {k} exceeds the bound {}", cert.rank_bound)));
            }
            match oracle_extremal(state, &marginals, &tol) {
                Ok(true) => Ok(()),
                Ok(false) => Err(fail("independent check finds a marginal-free perturbation")),
                Err(e) => Err(fail(e.to_string())),
            }
        }
        "not_extremal" => {
            let w = cert
                .witness
                .as_ref()
                .ok_or_else(|| fail("not_extremal without witness"))?;
            let n = dims.n();
            let plus = matrix_from_json(&w.rho_plus, n, "rho_plus")?;
            let minus = matrix_from_json(&w.rho_minus, n, "rho_minus")?;
            let direction = to_h(matrix_from_json(&w.direction, w.direction.len(), "direction")?)?;
            let witness = NonExtremalityWitness {
                direction,
                epsilon: w.epsilon,
                rho_plus: CoupledState::new(dims, plus).map_err(|e| fail(e.to_string()))?,
                rho_minus: CoupledState::new(dims, minus).map_err(|e| fail(e.to_string()))?,
            };
            witness
                .verify(state, &marginals, tol.membership)
                .map_err(|e| fail(e.to_string()))
        }
        other => Err(fail(format!("unknown verdict {other:?}"))),
    }
}
