//! On-disk JSON formats for channels, instruments and states.
//!
//! Complex numbers are written as `[re, im]` pairs and matrices as arrays
//! of rows. Every file carries a `format_version`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use dilation_core::{map_from_kraus, CMatrix, DensityMatrix, DynamicalMap, Instrument, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1";

/// Hermiticity tolerance applied to dynamical matrices read from disk.
pub const LOAD_HERMITICITY_TOL: f64 = 1e-8;

pub type ComplexPair = [f64; 2];
pub type MatrixData = Vec<Vec<ComplexPair>>;

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn data_to_matrix(
    data: &MatrixData,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<CMatrix, CliError> {
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(CliError::Validation(format!(
            "{what} must be {rows}x{cols}"
        )));
    }
    let entries = data
        .iter()
        .flatten()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    CMatrix::from_vec(rows, cols, entries).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedOperator {
    #[serde(default = "default_weight")]
    pub weight: f64,
    pub op: MatrixData,
}

/// The map itself: either weighted Kraus operators or the dynamical matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", content = "data", rename_all = "snake_case")]
pub enum ChannelPayload {
    Kraus(Vec<WeightedOperator>),
    DynamicalMatrix(MatrixData),
}

impl ChannelPayload {
    pub fn to_map(&self, dim: usize) -> Result<DynamicalMap, CliError> {
        match self {
            ChannelPayload::Kraus(ops) => {
                let mut terms = Vec::with_capacity(ops.len());
                for (k, w) in ops.iter().enumerate() {
                    if !w.weight.is_finite() {
                        return Err(CliError::Validation(format!(
                            "kraus[{k}] weight is not finite"
                        )));
                    }
                    let op = data_to_matrix(&w.op, dim, dim, &format!("kraus[{k}] operator"))?;
                    terms.push((w.weight, op));
                }
                Ok(map_from_kraus(&terms, dim)?)
            }
            ChannelPayload::DynamicalMatrix(data) => {
                let side = dim * dim;
                let bmat = data_to_matrix(data, side, side, "dynamical matrix")?;
                DynamicalMap::with_tolerance(dim, bmat, LOAD_HERMITICITY_TOL).map_err(|e| match e {
                    dilation_core::Error::NotHermitian { deviation } => {
                        CliError::Validation(format!(
                            "dynamical matrix violates the hermiticity condition \
                         Λ[rr',ss'] = conj(Λ[ss',rr']) (deviation {deviation:e})"
                        ))
                    }
                    other => other.into(),
                })
            }
        }
    }

    pub fn from_map(map: &DynamicalMap) -> Self {
        ChannelPayload::DynamicalMatrix(matrix_to_data(map.bmat()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpecFile {
    pub format_version: String,
    pub dim: usize,
    #[serde(flatten)]
    pub payload: ChannelPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ChannelSpecFile {
    pub fn from_map(map: &DynamicalMap, name: Option<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            dim: map.dim(),
            payload: ChannelPayload::from_map(map),
            name,
            description: None,
        }
    }

    pub fn to_map(&self) -> Result<DynamicalMap, CliError> {
        check_header(&self.format_version, self.dim)?;
        self.payload.to_map(self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub label: String,
    #[serde(flatten)]
    pub payload: ChannelPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSpecFile {
    pub format_version: String,
    pub dim: usize,
    pub outcomes: Vec<OutcomeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padded_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl InstrumentSpecFile {
    pub fn from_instrument(inst: &Instrument, name: Option<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            dim: inst.dim(),
            outcomes: inst
                .outcomes()
                .iter()
                .map(|(label, map)| OutcomeSpec {
                    label: label.clone(),
                    payload: ChannelPayload::from_map(map),
                })
                .collect(),
            padded_index: inst.padded_index(),
            name,
            description: None,
        }
    }

    pub fn to_instrument(&self) -> Result<Instrument, CliError> {
        check_header(&self.format_version, self.dim)?;
        let mut seen = HashSet::new();
        let mut outcomes = Vec::with_capacity(self.outcomes.len());
        for o in &self.outcomes {
            if !seen.insert(o.label.as_str()) {
                return Err(CliError::Validation(format!(
                    "duplicate outcome label {:?}",
                    o.label
                )));
            }
            outcomes.push((o.label.clone(), o.payload.to_map(self.dim)?));
        }
        let inst = Instrument::new(self.dim, outcomes)?;
        Ok(inst.with_padded_index(self.padded_index)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", content = "data", rename_all = "snake_case")]
pub enum StatePayload {
    DensityMatrix(MatrixData),
    /// Pure state amplitudes; normalized on load.
    Vector(Vec<ComplexPair>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpecFile {
    pub format_version: String,
    pub dim: usize,
    #[serde(flatten)]
    pub payload: StatePayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl StateSpecFile {
    pub fn to_state(&self) -> Result<DensityMatrix, CliError> {
        check_header(&self.format_version, self.dim)?;
        let state = match &self.payload {
            StatePayload::DensityMatrix(data) => {
                DensityMatrix::new(data_to_matrix(data, self.dim, self.dim, "density matrix")?)
            }
            StatePayload::Vector(v) => {
                if v.len() != self.dim {
                    return Err(CliError::Validation(format!(
                        "state vector must have {} entries",
                        self.dim
                    )));
                }
                let amps: Vec<C64> = v.iter().map(|&[re, im]| C64::new(re, im)).collect();
                DensityMatrix::pure(&amps)
            }
        };
        state.map_err(|e| CliError::Validation(e.to_string()))
    }
}

fn check_header(version: &str, dim: usize) -> Result<(), CliError> {
    if version != FORMAT_VERSION {
        return Err(CliError::Validation(format!(
            "unsupported format_version {version:?} (expected {FORMAT_VERSION:?})"
        )));
    }
    if dim == 0 {
        return Err(CliError::Validation("dim must be positive".into()));
    }
    Ok(())
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(
    path: &Path,
) -> Result<(T, Vec<u8>), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok((value, bytes))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_channel(path: &Path) -> Result<DynamicalMap, CliError> {
    read_json::<ChannelSpecFile>(path)?.0.to_map()
}

pub fn load_instrument(path: &Path) -> Result<Instrument, CliError> {
    read_json::<InstrumentSpecFile>(path)?.0.to_instrument()
}

pub fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    read_json::<StateSpecFile>(path)?.0.to_state()
}

pub fn save_channel(map: &DynamicalMap, name: Option<String>, path: &Path) -> Result<(), CliError> {
    write_json(&ChannelSpecFile::from_map(map, name), path)
}

pub fn save_instrument(
    inst: &Instrument,
    name: Option<String>,
    path: &Path,
) -> Result<(), CliError> {
    write_json(&InstrumentSpecFile::from_instrument(inst, name), path)
}
