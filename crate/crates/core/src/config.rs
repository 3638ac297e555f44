//! Model configurations: finite substitutions for symbolic sets such as `Int`
//! and `Nat`, constant parameters, and bounds used by state constraints.
//!
//! File format (values in the canonical encoding):
//!
//! ```json
//! {
//!   "substitutions": {"Readers": ["r1"], "Writers": ["w1", "w2"], "RegVals": [0, 1]},
//!   "constants":     {"InitRegVal": 0},
//!   "constraint":    {"MaxWrites": 2, "MaxLen": 3}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value as Json;
use thiserror::Error;

use crate::encode::{decode, encode, DecodeError};
use crate::value::{SetV, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("symbolic set `{0}` has no substitution in the model config")]
    MissingSubstitution(String),
    #[error("substitution for `{0}` must be a finite set")]
    NotASet(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}`: {reason}")]
    BadParam { name: String, reason: String },
    #[error("config file: {0}")]
    Syntax(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelConfig {
    substitutions: BTreeMap<String, SetV>,
    constants: BTreeMap<String, Value>,
    constraint: BTreeMap<String, Value>,
}

impl ModelConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn substitute(mut self, name: &str, set: impl IntoIterator<Item = Value>) -> Self {
        self.substitutions
            .insert(name.to_string(), set.into_iter().collect());
        self
    }

    pub fn constant(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.constants.insert(name.to_string(), v.into());
        self
    }

    pub fn bound(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.constraint.insert(name.to_string(), v.into());
        self
    }

    pub fn substitution(&self, name: &str) -> Result<&SetV, ConfigError> {
        self.substitutions
            .get(name)
            .ok_or_else(|| ConfigError::MissingSubstitution(name.to_string()))
    }

    pub fn has_substitution(&self, name: &str) -> bool {
        self.substitutions.contains_key(name)
    }

    pub fn param(&self, name: &str) -> Result<&Value, ConfigError> {
        self.constants
            .get(name)
            .ok_or_else(|| ConfigError::MissingParam(name.to_string()))
    }

    pub fn param_or(&self, name: &str, default: Value) -> Value {
        self.constants.get(name).cloned().unwrap_or(default)
    }

    pub fn param_set(&self, name: &str) -> Result<SetV, ConfigError> {
        self.param(name)?
            .as_set()
            .cloned()
            .map_err(|e| ConfigError::BadParam {
                name: name.to_string(),
                reason: e.to_string(),
            })
    }

    /// Integer bound for a named state constraint, if configured.
    pub fn constraint_bound(&self, name: &str) -> Result<Option<i64>, ConfigError> {
        match self.constraint.get(name) {
            None => Ok(None),
            Some(v) => v.as_int().map(Some).map_err(|e| ConfigError::BadParam {
                name: name.to_string(),
                reason: e.to_string(),
            }),
        }
    }

    /// Fills in every entry of `defaults` that this config does not set.
    pub fn with_defaults(&self, defaults: &ModelConfig) -> ModelConfig {
        let mut out = defaults.clone();
        out.substitutions.extend(self.substitutions.clone());
        out.constants.extend(self.constants.clone());
        out.constraint.extend(self.constraint.clone());
        out
    }

    pub fn from_json(j: &Json) -> Result<ModelConfig, ConfigError> {
        let obj = j
            .as_object()
            .ok_or_else(|| ConfigError::Syntax("top level must be an object".into()))?;
        let mut cfg = ModelConfig::new();
        for (key, section) in obj {
            let entries = section
                .as_object()
                .ok_or_else(|| ConfigError::Syntax(format!("`{key}` must be an object")))?;
            match key.as_str() {
                "constants" => {
                    for (k, v) in entries {
                        cfg.constants.insert(k.clone(), decode(v)?);
                    }
                }
                "substitutions" => {
                    for (k, v) in entries {
                        match decode(v)? {
                            Value::Set(s) => {
                                cfg.substitutions.insert(k.clone(), s);
                            }
                            _ => return Err(ConfigError::NotASet(k.clone())),
                        }
                    }
                }
                "constraint" => {
                    for (k, v) in entries {
                        cfg.constraint.insert(k.clone(), decode(v)?);
                    }
                }
                other => {
                    return Err(ConfigError::Syntax(format!("unknown section `{other}`")));
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ModelConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let j: Json =
            serde_json::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        Self::from_json(&j)
    }

    pub fn to_json(&self) -> Json {
        let section = |m: &BTreeMap<String, Value>| {
            Json::Object(m.iter().map(|(k, v)| (k.clone(), encode(v))).collect())
        };
        let subs = Json::Object(
            self.substitutions
                .iter()
                .map(|(k, v)| (k.clone(), encode(&Value::Set(v.clone()))))
                .collect(),
        );
        serde_json::json!({
            "constants": section(&self.constants),
            "substitutions": subs,
            "constraint": section(&self.constraint),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let j: Json = serde_json::from_str(
            r#"{"constants": {"Readers": ["r1"], "InitRegVal": 0},
                "substitutions": {"Int": [-1, 0, 1]},
                "constraint": {"MaxWrites": 2}}"#,
        )
        .unwrap();
        let cfg = ModelConfig::from_json(&j).unwrap();
        assert_eq!(cfg.substitution("Int").unwrap().len(), 3);
        assert_eq!(cfg.param("InitRegVal").unwrap(), &Value::Int(0));
        assert_eq!(cfg.constraint_bound("MaxWrites").unwrap(), Some(2));
        assert_eq!(cfg.constraint_bound("MaxLen").unwrap(), None);
        assert_eq!(ModelConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn missing_substitution_is_an_error() {
        let cfg = ModelConfig::new();
        assert!(matches!(
            cfg.substitution("Nat"),
            Err(ConfigError::MissingSubstitution(_))
        ));
    }

    #[test]
    fn rejects_non_set_substitution() {
        let j: Json = serde_json::from_str(r#"{"substitutions": {"Int": 3}}"#).unwrap();
        assert!(matches!(
            ModelConfig::from_json(&j),
            Err(ConfigError::NotASet(_))
        ));
        let j: Json = serde_json::from_str(r#"{"bogus": {}}"#).unwrap();
        assert!(ModelConfig::from_json(&j).is_err());
    }
}
