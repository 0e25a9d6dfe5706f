//! JSON module specs and group lookup.

use std::fs;
use std::path::Path;

use mgc_core::cmod::{CModError, CModule};
use mgc_core::linalg::IntMatrix;
use mgc_core::verify::{zoo_member, GroupSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed module spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid module spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Module(#[from] CModError),
    #[error("{0} is neither a zoo name nor a readable file")]
    Unknown(String),
}

/// `{"kind":"lattice","matrix":[[…]]}`, `{"kind":"localized","m":2,"t_num":2,"t_den":1}`,
/// `{"kind":"finite","factors":[9],"action":[[4]]}`, `{"kind":"sum","parts":[…]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModuleSpec {
    Lattice {
        matrix: Vec<Vec<i64>>,
    },
    Localized {
        m: u64,
        t_num: i64,
        t_den: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<i64>>>,
    },
    Finite {
        factors: Vec<i64>,
        action: Vec<Vec<i64>>,
    },
    Sum {
        parts: Vec<ModuleSpec>,
    },
}

fn square(rows: &[Vec<i64>], what: &str) -> Result<IntMatrix, SpecError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(SpecError::Invalid(format!("{what} must be a nonempty square matrix")));
    }
    Ok(IntMatrix::from_rows(rows))
}

impl ModuleSpec {
    pub fn to_module(&self) -> Result<CModule, SpecError> {
        Ok(match self {
            ModuleSpec::Lattice { matrix } => CModule::lattice(square(matrix, "matrix")?)?,
            ModuleSpec::Localized { m, t_num, t_den, matrix } => {
                if *m < 2 || *t_num == 0 || *t_den == 0 {
                    return Err(SpecError::Invalid("localized needs m >= 2 and nonzero t_num, t_den".into()));
                }
                let a = matrix.as_deref().map(|r| square(r, "matrix")).transpose()?;
                CModule::localized(*m, *t_num, *t_den, a)?
            }
            ModuleSpec::Finite { factors, action } => {
                let a = square(action, "action")?;
                if a.rows() != factors.len() || factors.iter().any(|&d| d < 0) {
                    return Err(SpecError::Invalid("factors must be nonnegative, one per action row".into()));
                }
                CModule::finite(factors, &a)?
            }
            ModuleSpec::Sum { parts } => {
                if parts.is_empty() {
                    return Err(SpecError::Invalid("sum needs at least one part".into()));
                }
                CModule::direct_sum(parts.iter().map(|p| p.to_module()).collect::<Result<_, _>>()?)
            }
        })
    }
}

pub fn parse_module(json: &str) -> Result<CModule, SpecError> {
    serde_json::from_str::<ModuleSpec>(json)?.to_module()
}

/// A zoo name, or a path to a JSON module spec.
pub fn resolve_group(name_or_path: &str) -> Result<GroupSpec, SpecError> {
    if let Some(g) = zoo_member(name_or_path) {
        return Ok(g);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(SpecError::Unknown(name_or_path.to_string()));
    }
    let text = fs::read_to_string(path).map_err(|source| SpecError::Io { path: name_or_path.to_string(), source })?;
    let module = parse_module(&text)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| name_or_path.to_string());
    Ok(GroupSpec::new(&name, module))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let m = parse_module(r#"{"kind":"lattice","matrix":[[1,3],[3,10]]}"#).unwrap();
        assert!(matches!(m, CModule::Lattice(_)));
        let m = parse_module(r#"{"kind":"localized","m":2,"t_num":2,"t_den":1}"#).unwrap();
        assert!(matches!(m, CModule::Localized { .. }));
        let m = parse_module(r#"{"kind":"finite","factors":[9],"action":[[4]]}"#).unwrap();
        assert!(matches!(m, CModule::FiniteAb(_)));
        let m = parse_module(r#"{"kind":"sum","parts":[{"kind":"lattice","matrix":[[-1]]},{"kind":"finite","factors":[3],"action":[[2]]}]}"#)
            .unwrap();
        assert!(matches!(m, CModule::DirectSum(_)));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(parse_module(r#"{"kind":"lattice","matrix":[[2]]}"#), Err(SpecError::Module(CModError::NotAnAutomorphism))));
        assert!(matches!(parse_module(r#"{"kind":"localized","m":2,"t_num":3,"t_den":1}"#), Err(SpecError::Module(_))));
        assert!(matches!(parse_module(r#"{"kind":"lattice","matrix":[[1,0]]}"#), Err(SpecError::Invalid(_))));
        assert!(matches!(parse_module(r#"{"kind":"torus"}"#), Err(SpecError::Json(_))));
    }

    #[test]
    fn round_trip() {
        let s = ModuleSpec::Finite { factors: vec![9], action: vec![vec![4]] };
        let back: ModuleSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
