//! JSON documents read and written by the command-line tool.
//!
//! Complex entries are `[re, im]` pairs. Doubles are written in shortest
//! round-trip form and parsed exactly, so a write followed by a read gives
//! back the same bits.

use std::fs;
use std::path::Path;

use extremal_core::numcore::{ComplexMatrix, DimensionPair, HermitianMatrix, C64};
use extremal_core::{CoupledState, MarginalPair};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: &str = "v1";

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Parses a square `order × order` matrix, naming `field` in diagnostics.
pub fn matrix_from_json(rows: &JsonMatrix, order: usize, field: &str) -> Result<ComplexMatrix, CliError> {
    if rows.len() != order {
        return Err(CliError::Input(format!(
            "{field}: expected {order} rows, found {}",
            rows.len()
        )));
    }
    let mut data = Vec::with_capacity(order * order);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != order {
            return Err(CliError::Input(format!(
                "{field}: row {i} has {} entries, expected {order}",
                row.len()
            )));
        }
        for &[re, im] in row {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Input(format!("{field}: non-finite entry in row {i}")));
            }
            data.push(C64::new(re, im));
        }
    }
    ComplexMatrix::from_vec(order, order, data).map_err(|e| CliError::Input(format!("{field}: {e}")))
}

fn hermitian_from_json(rows: &JsonMatrix, order: usize, field: &str) -> Result<HermitianMatrix, CliError> {
    let m = matrix_from_json(rows, order, field)?;
    HermitianMatrix::symmetrized(&m).map_err(|e| CliError::Input(format!("{field}: {e}")))
}

fn check_schema(schema: &str) -> Result<(), CliError> {
    if schema != SCHEMA {
        return Err(CliError::Input(format!(
            "unsupported schema {schema:?}, expected {SCHEMA:?}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub schema: String,
    pub d1: usize,
    pub d2: usize,
    pub rho: JsonMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<JsonMatrix>,
}

impl StateFile {
    pub fn new(state: &CoupledState, marginals: Option<&MarginalPair>) -> Self {
        let dims = state.dims();
        Self {
            schema: SCHEMA.to_string(),
            d1: dims.d1(),
            d2: dims.d2(),
            rho: matrix_to_json(state.matrix()),
            rho1: marginals.map(|m| matrix_to_json(m.rho1())),
            rho2: marginals.map(|m| matrix_to_json(m.rho2())),
        }
    }

    pub fn dims(&self) -> Result<DimensionPair, CliError> {
        DimensionPair::new(self.d1, self.d2).map_err(|e| CliError::Input(format!("d1/d2: {e}")))
    }

    /// The state as written; hermiticity is judged later by membership.
    pub fn state(&self) -> Result<CoupledState, CliError> {
        check_schema(&self.schema)?;
        let dims = self.dims()?;
        let rho = matrix_from_json(&self.rho, dims.n(), "rho")?;
        CoupledState::new(dims, rho).map_err(|e| CliError::Input(format!("rho: {e}")))
    }

    /// Embedded target marginals, if both are present.
    pub fn marginals(&self, tol: f64) -> Result<Option<MarginalPair>, CliError> {
        let dims = self.dims()?;
        match (&self.rho1, &self.rho2) {
            (None, None) => Ok(None),
            (Some(r1), Some(r2)) => marginal_pair(r1, r2, dims, tol).map(Some),
            _ => Err(CliError::Input("rho1 and rho2 must be given together".into())),
        }
    }
}

/// Target marginals supplied on their own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalsFile {
    pub schema: String,
    pub rho1: JsonMatrix,
    pub rho2: JsonMatrix,
}

impl MarginalsFile {
    pub fn new(m: &MarginalPair) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            rho1: matrix_to_json(m.rho1()),
            rho2: matrix_to_json(m.rho2()),
        }
    }

    pub fn marginals(&self, tol: f64) -> Result<MarginalPair, CliError> {
        check_schema(&self.schema)?;
        let dims = DimensionPair::new(self.rho1.len(), self.rho2.len())
            .map_err(|e| CliError::Input(format!("marginals: {e}")))?;
        marginal_pair(&self.rho1, &self.rho2, dims, tol)
    }
}

fn marginal_pair(r1: &JsonMatrix, r2: &JsonMatrix, dims: DimensionPair, tol: f64) -> Result<MarginalPair, CliError> {
    let rho1 = hermitian_from_json(r1, dims.d1(), "rho1")?;
    let rho2 = hermitian_from_json(r2, dims.d2(), "rho2")?;
    MarginalPair::new(rho1, rho2, tol).map_err(|e| CliError::Input(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json(value)).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use extremal_core::numcore::random::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn state_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = DimensionPair::new(2, 3).unwrap();
        let state = CoupledState::from_hermitian(dims, random_density(&mut rng, 6, 3)).unwrap();
        let marg = MarginalPair::of_state(&state);
        let file = StateFile::new(&state, Some(&marg));
        let back: StateFile = serde_json::from_str(&to_json(&file)).unwrap();
        assert_eq!(back, file);
        let s = back.state().unwrap();
        for (a, b) in s.matrix().as_slice().iter().zip(state.matrix().as_slice()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn shape_errors_are_reported() {
        let file = StateFile {
            schema: SCHEMA.into(),
            d1: 2,
            d2: 2,
            rho: vec![vec![[0.25, 0.0]; 4]; 3],
            rho1: None,
            rho2: None,
        };
        let err = file.state().unwrap_err();
        assert!(err.to_string().contains("expected 4 rows"), "{err}");
        let file = StateFile {
            schema: "v0".into(),
            ..file
        };
        assert!(file.state().unwrap_err().to_string().contains("schema"));
    }

    #[test]
    fn lone_marginal_rejected() {
        let file = StateFile {
            schema: SCHEMA.into(),
            d1: 1,
            d2: 1,
            rho: vec![vec![[1.0, 0.0]]],
            rho1: Some(vec![vec![[1.0, 0.0]]]),
            rho2: None,
        };
        assert!(file.marginals(1e-8).is_err());
    }

    #[test]
    fn marginals_file_round_trip() {
        let m = MarginalPair::maximally_mixed(DimensionPair::new(2, 3).unwrap());
        let f = MarginalsFile::new(&m);
        let back: MarginalsFile = serde_json::from_str(&to_json(&f)).unwrap();
        assert_eq!(back.marginals(1e-10).unwrap(), m);
    }
}
