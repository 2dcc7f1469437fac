//! The on-disk interchange format: a labeled density matrix as JSON with the
//! complex matrix split into row-major real and imaginary planes. Loading
//! runs the full state validation (shape, hermiticity, unit trace, positive
//! semidefiniteness), so a file that parses into a [`LabeledState`] is a
//! physical state.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use recoverq::{C64, CMat, LabeledState, SystemLayout};

use crate::report::sig12;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub label: String,
    pub dim: usize,
}

/// Row-major planes of a complex matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixPlanes {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub systems: Vec<SystemSpec>,
    pub matrix: MatrixPlanes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl StateFile {
    /// Captures a state, rounding entries to 12 significant digits so that
    /// emission is byte-deterministic and reloads agree within 1e-12.
    pub fn from_state(state: &LabeledState, metadata: Option<Metadata>) -> Self {
        let n = state.layout().total_dim();
        let m = state.matrix();
        let plane = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| sig12(f(&m[(i, j)]))).collect())
                .collect()
        };
        StateFile {
            systems: state
                .layout()
                .entries()
                .iter()
                .map(|(label, dim)| SystemSpec {
                    label: label.clone(),
                    dim: *dim,
                })
                .collect(),
            matrix: MatrixPlanes {
                re: plane(|z| z.re),
                im: plane(|z| z.im),
            },
            metadata,
        }
    }

    /// Validates and converts to a live state.
    pub fn to_state(&self) -> Result<LabeledState, CliError> {
        let layout = SystemLayout::from_vec(
            self.systems
                .iter()
                .map(|s| (s.label.clone(), s.dim))
                .collect(),
        )
        .map_err(CliError::validation)?;
        let n = layout.total_dim();
        let check_plane = |plane: &Vec<Vec<f64>>, which: &str| -> Result<(), CliError> {
            if plane.len() != n || plane.iter().any(|row| row.len() != n) {
                return Err(CliError::invalid(format!(
                    "matrix plane `{which}` must be {n}x{n} for the declared systems"
                )));
            }
            Ok(())
        };
        check_plane(&self.matrix.re, "re")?;
        check_plane(&self.matrix.im, "im")?;
        let m = CMat::from_fn(n, n, |i, j| {
            C64::new(self.matrix.re[i][j], self.matrix.im[i][j])
        });
        LabeledState::new(layout, m).map_err(CliError::validation)
    }
}

/// A four-message prover strategy on disk: the two unitaries as re/im
/// planes plus the party and workspace dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Strategy4File {
    pub d_a: usize,
    pub d_c: usize,
    pub d_d: usize,
    pub d_e: usize,
    pub u: MatrixPlanes,
    pub v: MatrixPlanes,
}

fn planes_to_matrix(planes: &MatrixPlanes, what: &str) -> Result<CMat, CliError> {
    let rows = planes.re.len();
    let cols = planes.re.first().map_or(0, |r| r.len());
    let ragged = rows == 0
        || cols == 0
        || planes.re.iter().any(|r| r.len() != cols)
        || planes.im.len() != rows
        || planes.im.iter().any(|r| r.len() != cols);
    if ragged {
        return Err(CliError::invalid(format!(
            "matrix `{what}` has ragged or mismatched re/im planes"
        )));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        C64::new(planes.re[i][j], planes.im[i][j])
    }))
}

pub fn load_strategy4(path: &Path) -> Result<recoverq::ProverStrategy4, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
    let file: Strategy4File = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("cannot parse {}: {e}", path.display())))?;
    let u = planes_to_matrix(&file.u, "u")?;
    let v = planes_to_matrix(&file.v, "v")?;
    recoverq::ProverStrategy4::new(u, v, file.d_a, file.d_c, file.d_d, file.d_e)
        .map_err(CliError::validation)
}

pub fn load(path: &Path) -> Result<(LabeledState, StateFile), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("cannot parse {}: {e}", path.display())))?;
    let state = file.to_state()?;
    Ok((state, file))
}

pub fn save(path: &Path, file: &StateFile) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(file)
        .map_err(|e| CliError::invalid(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))
}
