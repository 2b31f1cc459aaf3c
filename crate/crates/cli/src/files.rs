//! On-disk formats: channel files, state files and constraint files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major arrays of
//! rows. Non-finite entries are rejected.

use std::path::Path;

use jaynes_qmp::operators::validate_density;
use jaynes_qmp::{DensityMatrix, Operator, ProcessSpec, Tolerances, C64};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::CliError;
use crate::report;

pub const SCHEMA_VERSION: &str = "1";

pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindField {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub schema_version: String,
    pub kind: KindField,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixData>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lindblad_ops: Option<Vec<MatrixData>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub schema_version: String,
    pub dim: usize,
    pub matrix: MatrixData,
}

/// One constraint: a basis member by `label` (`"C3"`) or 1-based `index`,
/// or an explicit conserved `observable` (checked on load).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<MatrixData>,
    pub target: f64,
}

/// Constraints for `fit`. Mode `known` reads `state` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsFile {
    pub schema_version: String,
    #[serde(default)]
    pub constraints: Vec<ConstraintEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixData>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Parse(format!("at {path}: {}", e.into_inner()))
    })
}

fn check_schema(version: &str) -> Result<(), CliError> {
    if version != SCHEMA_VERSION {
        return Err(CliError::Parse(format!(
            "at schema_version: unsupported version {version:?}, expected {SCHEMA_VERSION:?}"
        )));
    }
    Ok(())
}

pub fn matrix_from_data(data: &MatrixData, dim: usize, path: &str) -> Result<Operator, CliError> {
    if data.len() != dim {
        return Err(CliError::Parse(format!("at {path}: expected {dim} rows, found {}", data.len())));
    }
    let mut rows = Vec::with_capacity(dim);
    for (r, row) in data.iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::Parse(format!(
                "at {path}[{r}]: expected {dim} entries, found {}",
                row.len()
            )));
        }
        let mut out = Vec::with_capacity(dim);
        for (c, [re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Parse(format!("at {path}[{r}][{c}]: non-finite entry")));
            }
            out.push(C64::new(*re, *im));
        }
        rows.push(out);
    }
    Operator::from_rows(&rows).map_err(|e| CliError::Parse(format!("at {path}: {e}")))
}

pub fn matrix_to_data(op: &Operator) -> MatrixData {
    let n = op.dim();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let z = op.entry(r, c);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

impl ChannelFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file: Self = read_json(path)?;
        check_schema(&file.schema_version)?;
        Ok(file)
    }

    /// Builds the process. With `validate`, complete positivity data must
    /// also preserve the trace within tolerance.
    pub fn to_spec(&self, tol: &Tolerances, validate: bool) -> Result<ProcessSpec, CliError> {
        if self.dim == 0 {
            return Err(CliError::Parse("at dim: must be positive".into()));
        }
        let spec = match self.kind {
            KindField::Discrete => {
                if self.hamiltonian.is_some() || self.lindblad_ops.is_some() {
                    return Err(CliError::Parse(
                        "at kind: discrete files take only kraus operators".into(),
                    ));
                }
                let kraus = self
                    .kraus
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("at kraus: missing for a discrete process".into()))?;
                let ops = kraus
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix_from_data(m, self.dim, &format!("kraus[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                ProcessSpec::discrete_unchecked(ops)
            }
            KindField::Continuous => {
                if self.kraus.is_some() {
                    return Err(CliError::Parse(
                        "at kind: continuous files take hamiltonian and lindblad_ops".into(),
                    ));
                }
                let h = self
                    .hamiltonian
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("at hamiltonian: missing for a continuous process".into()))?;
                let h = matrix_from_data(h, self.dim, "hamiltonian")?;
                let ls = self
                    .lindblad_ops
                    .iter()
                    .flatten()
                    .enumerate()
                    .map(|(i, m)| matrix_from_data(m, self.dim, &format!("lindblad_ops[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                ProcessSpec::continuous_unchecked(h, ls)
            }
        }
        .map_err(|e| CliError::Parse(e.to_string()))?;
        if validate {
            spec.validate(tol).map_err(|e| CliError::Parse(e.to_string()))?;
        }
        Ok(spec)
    }

    pub fn from_spec(spec: &ProcessSpec, label: Option<&str>, seed: Option<u64>) -> Self {
        let base = Self {
            schema_version: SCHEMA_VERSION.into(),
            kind: KindField::Discrete,
            dim: spec.dim(),
            label: label.map(str::to_string),
            seed,
            kraus: None,
            hamiltonian: None,
            lindblad_ops: None,
        };
        match spec {
            ProcessSpec::Discrete { kraus } => Self {
                kraus: Some(kraus.iter().map(matrix_to_data).collect()),
                ..base
            },
            ProcessSpec::Continuous {
                hamiltonian,
                lindblad_ops,
            } => Self {
                kind: KindField::Continuous,
                hamiltonian: Some(matrix_to_data(hamiltonian)),
                lindblad_ops: Some(lindblad_ops.iter().map(matrix_to_data).collect()),
                ..base
            },
        }
    }

    /// Canonical serialized form.
    pub fn to_canonical_string(&self) -> String {
        report::to_canonical_json(self)
    }
}

impl StateFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file: Self = read_json(path)?;
        check_schema(&file.schema_version)?;
        Ok(file)
    }

    pub fn to_state(&self, tol: &Tolerances) -> Result<DensityMatrix, CliError> {
        let op = matrix_from_data(&self.matrix, self.dim, "matrix")?;
        validate_density(&op, tol).map_err(|e| CliError::Parse(format!("at matrix: {e}")))
    }
}

impl ConstraintsFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file: Self = read_json(path)?;
        check_schema(&file.schema_version)?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use jaynes_qmp::channels;

    #[test]
    fn channel_round_trip_is_byte_identical() {
        let spec = channels::amplitude_damping(0.5);
        let text = ChannelFile::from_spec(&spec, Some("ad"), None).to_canonical_string();
        let parsed: ChannelFile = parse_json(&text).unwrap();
        assert_eq!(parsed.to_canonical_string(), text);
        let back = parsed.to_spec(&Tolerances::default(), true).unwrap();
        assert_eq!(back.dim(), 2);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = r#"{"schema_version":"1","kind":"discrete","dim":2,"kraus":[[[[1,0],[0,0]],[[0,0],"x"]]]}"#;
        let err = parse_json::<ChannelFile>(bad).unwrap_err();
        assert!(err.to_string().contains("kraus[0][1][1]"), "{err}");

        let short = r#"{"schema_version":"1","kind":"discrete","dim":2,"kraus":[[[[1,0],[0,0]]]]}"#;
        let file: ChannelFile = parse_json(short).unwrap();
        let err = file.to_spec(&Tolerances::default(), true).unwrap_err();
        assert!(err.to_string().contains("kraus[0]"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"schema_version":"1","kind":"discrete","dim":1,"kraus":[[[[1,0]]]],"extra":1}"#;
        assert!(parse_json::<ChannelFile>(bad).is_err());
    }

    #[test]
    fn broken_completeness_is_rejected_only_when_validating() {
        let text = r#"{"schema_version":"1","kind":"discrete","dim":2,"kraus":[[[[1,0],[0,0]],[[0,0],[0.5,0]]]]}"#;
        let file: ChannelFile = parse_json(text).unwrap();
        assert!(file.to_spec(&Tolerances::default(), true).is_err());
        assert!(file.to_spec(&Tolerances::default(), false).is_ok());
    }
}
