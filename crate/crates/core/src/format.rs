//! JSON instance and report files.
//!
//! Matrices are nested rows of `[re, im]` pairs. Reports write every real
//! with 17 significant digits so that parsing them back is exact.

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quantum::{validate_density, ComplexMatrix, StateEnsemble};

pub const FORMAT_VERSION: &str = "qsd-1";

pub type MatrixPairs = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub prior: f64,
    pub matrix: MatrixPairs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: String,
    pub dimension: usize,
    pub states: Vec<StateEntry>,
}

impl InstanceFile {
    pub fn from_ensemble(ensemble: &StateEnsemble) -> Self {
        Self {
            version: FORMAT_VERSION.into(),
            dimension: ensemble.dim(),
            states: (0..ensemble.len())
                .map(|x| StateEntry {
                    prior: ensemble.prior(x),
                    matrix: ensemble.state(x).matrix().to_pairs(),
                    label: None,
                })
                .collect(),
        }
    }

    /// SHA-256 over the version, shape, priors and matrix entries as parsed.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.version.as_bytes());
        h.update((self.dimension as u64).to_le_bytes());
        h.update((self.states.len() as u64).to_le_bytes());
        for s in &self.states {
            h.update(s.prior.to_bits().to_le_bytes());
            for row in &s.matrix {
                for [re, im] in row {
                    h.update(re.to_bits().to_le_bytes());
                    h.update(im.to_bits().to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }

    pub fn to_ensemble(&self) -> Result<StateEnsemble> {
        if self.version != FORMAT_VERSION {
            return Err(malformed(
                "version",
                format!("expected \"{FORMAT_VERSION}\", found \"{}\"", self.version),
            ));
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (index, entry) in self.states.iter().enumerate() {
            let path = format!("states[{index}].matrix");
            if entry.matrix.len() != self.dimension
                || entry.matrix.iter().any(|r| r.len() != self.dimension)
            {
                return Err(malformed(
                    &path,
                    format!("expected a {0}x{0} matrix", self.dimension),
                ));
            }
            let m = ComplexMatrix::from_pairs(&entry.matrix)
                .and_then(validate_density)
                .map_err(|e| Error::InvalidState {
                    index,
                    source: Box::new(e),
                })?;
            states.push(m);
        }
        let priors = self.states.iter().map(|s| s.prior).collect();
        StateEnsemble::new(priors, states)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

fn malformed(path: &str, message: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.into(),
        message: message.into(),
    }
}

fn json_error(source: &str, e: serde_json::Error) -> Error {
    malformed(source, e.to_string())
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(|e| json_error("instance", e))
}

/// Serializes with every non-integer number written as `{:.16e}`.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serializable");
    canonicalize_reals(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("serializable");
    out.push('\n');
    out
}

fn canonicalize_reals(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *n = format!("{x:.16e}")
                .parse::<Number>()
                .expect("valid number literal");
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize_reals),
        Value::Object(map) => map.values_mut().for_each(canonicalize_reals),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEcho {
    pub hash: String,
    pub dimension: usize,
    pub states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMetadata {
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMatrices {
    pub povm: Vec<MatrixPairs>,
    pub k: MatrixPairs,
    pub sigma: Vec<MatrixPairs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub instance: InstanceEcho,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<ReportMatrices>,
}

impl Report {
    pub fn new(command: &str, instance: &InstanceFile, result: Value) -> Self {
        Self {
            version: FORMAT_VERSION.into(),
            command: command.into(),
            instance: InstanceEcho {
                hash: instance.hash(),
                dimension: instance.dimension,
                states: instance.states.len(),
            },
            result,
            solver: None,
            matrices: None,
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

pub fn parse_report(text: &str) -> Result<Report> {
    let report: Report = serde_json::from_str(text).map_err(|e| json_error("report", e))?;
    if report.version != FORMAT_VERSION {
        return Err(malformed(
            "version",
            format!(
                "expected \"{FORMAT_VERSION}\", found \"{}\"",
                report.version
            ),
        ));
    }
    Ok(report)
}

pub fn matrices_from_pairs(path: &str, items: &[MatrixPairs]) -> Result<Vec<ComplexMatrix>> {
    items
        .iter()
        .enumerate()
        .map(|(i, m)| {
            ComplexMatrix::from_pairs(m)
                .map_err(|e| malformed(&format!("{path}[{i}]"), e.to_string()))
        })
        .collect()
}
