//! The built-in example specifications, keyed by name.
//!
//! Every entry knows its required model parameters, a default model, the
//! refinement mappings it supports (each naming another entry as its
//! target), and a registry of named invariants, reachability targets and
//! action properties for the command line.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::{ConfigError, ModelConfig};
use crate::explorer::ActionProperty;
use crate::expr::{lit, Expr, Lambda};
use crate::prophecy::{ProphecyShape, ProphecyTable};
use crate::spec::{RefinementMapping, SpecDef, SpecError};
use crate::stuttering::StutterTable;
use crate::value::{sentinel, SetV, Value};

mod afek;
mod hour;
mod linear;
mod minmax;
mod sendint;
mod sendseq;
mod sendset;
mod snapshot;

pub use linear::{linear_assumps, obj_values, LinearParams};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown example `{0}`")]
    UnknownSpec(String),
    #[error("example `{spec}` has no mapping `{mapping}`")]
    UnknownMapping { spec: String, mapping: String },
    #[error("example `{spec}` has no {kind} named `{name}`")]
    UnknownPredicate {
        spec: String,
        kind: &'static str,
        name: String,
    },
    #[error("example `{spec}` has no {what}")]
    NotApplicable { spec: String, what: &'static str },
    #[error("example `{spec}` needs parameter `{param}`")]
    MissingParam { spec: String, param: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

pub type CatalogResult<T> = Result<T, CatalogError>;

/// A refinement mapping from an entry to another entry of the catalog.
pub struct MappingEntry {
    pub name: &'static str,
    pub target: &'static str,
    pub build: fn(&SpecDef) -> RefinementMapping,
}

/// A state predicate with a registry name.
pub struct NamedExpr {
    pub name: &'static str,
    pub about: &'static str,
    pub build: fn(&SpecDef) -> Expr,
}

/// An action property with a registry name.
pub struct NamedAction {
    pub name: &'static str,
    pub about: &'static str,
    pub build: fn(&SpecDef) -> ActionProperty,
}

/// What `check-proph-conditions` needs: the spec the prophecy variable is
/// added to, and the prophecy's shape and per-subaction table.
pub struct ProphecySetup {
    pub base: SpecDef,
    pub shape: ProphecyShape,
    pub table: ProphecyTable,
}

/// What `check-stutter-conditions` needs.
pub struct StutterSetup {
    /// The spec the stuttering variable is added to.
    pub base: SpecDef,
    pub table: StutterTable,
    /// Constant conditions `(label, Sigma, bot, decr)` that must hold.
    pub constants: Vec<(String, SetV, Value, Lambda)>,
}

pub struct ExampleEntry {
    pub name: &'static str,
    pub about: &'static str,
    /// Substitutions, constants or bounds that must be present in the model.
    pub required_params: &'static [&'static str],
    pub defaults: fn() -> ModelConfig,
    build: fn(&ModelConfig) -> CatalogResult<SpecDef>,
    pub mappings: &'static [MappingEntry],
    pub invariants: &'static [NamedExpr],
    pub targets: &'static [NamedExpr],
    pub action_props: &'static [NamedAction],
    pub prophecy: Option<fn(&ModelConfig) -> CatalogResult<ProphecySetup>>,
    pub stuttering: Option<fn(&ModelConfig) -> CatalogResult<StutterSetup>>,
}

impl ExampleEntry {
    /// Builds the spec. Every required parameter must be present in `cfg`.
    pub fn build(&self, cfg: &ModelConfig) -> CatalogResult<SpecDef> {
        for p in self.required_params {
            let present = cfg.has_substitution(p)
                || cfg.param(p).is_ok()
                || matches!(cfg.constraint_bound(p), Ok(Some(_)));
            if !present {
                return Err(CatalogError::MissingParam {
                    spec: self.name.to_string(),
                    param: p.to_string(),
                });
            }
        }
        (self.build)(cfg)
    }

    pub fn build_default(&self) -> CatalogResult<SpecDef> {
        self.build(&(self.defaults)())
    }

    pub fn mapping(&self, name: &str) -> CatalogResult<&MappingEntry> {
        self.mappings
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| CatalogError::UnknownMapping {
                spec: self.name.to_string(),
                mapping: name.to_string(),
            })
    }

    fn find<'a, T>(
        &self,
        items: &'a [T],
        key: impl Fn(&T) -> (&'static str, &'static str),
        kind: &'static str,
        name: &str,
    ) -> CatalogResult<&'a T> {
        items
            .iter()
            .find(|x| {
                let (n, about) = key(x);
                n == name || about == name
            })
            .ok_or_else(|| CatalogError::UnknownPredicate {
                spec: self.name.to_string(),
                kind,
                name: name.to_string(),
            })
    }

    /// Looks up an invariant by name or by its displayed formula.
    pub fn invariant(&self, name: &str) -> CatalogResult<&NamedExpr> {
        self.find(self.invariants, |x| (x.name, x.about), "invariant", name)
    }

    pub fn target(&self, name: &str) -> CatalogResult<&NamedExpr> {
        self.find(self.targets, |x| (x.name, x.about), "target", name)
    }

    pub fn action_prop(&self, name: &str) -> CatalogResult<&NamedAction> {
        self.find(self.action_props, |x| (x.name, x.about), "action property", name)
    }

    pub fn prophecy_setup(&self, cfg: &ModelConfig) -> CatalogResult<ProphecySetup> {
        self.build(cfg)?;
        let f = self.prophecy.ok_or_else(|| CatalogError::NotApplicable {
            spec: self.name.to_string(),
            what: "prophecy variable",
        })?;
        f(cfg)
    }

    pub fn stutter_setup(&self, cfg: &ModelConfig) -> CatalogResult<StutterSetup> {
        self.build(cfg)?;
        let f = self.stuttering.ok_or_else(|| CatalogError::NotApplicable {
            spec: self.name.to_string(),
            what: "stuttering variable",
        })?;
        f(cfg)
    }
}

/// All entries, in registry order.
pub fn entries() -> Vec<&'static ExampleEntry> {
    let mut all: Vec<&'static ExampleEntry> = Vec::new();
    all.extend(minmax::ENTRIES.iter());
    all.extend(sendint::ENTRIES.iter());
    all.extend(sendset::ENTRIES.iter());
    all.extend(sendseq::ENTRIES.iter());
    all.extend(hour::ENTRIES.iter());
    all.extend(linear::ENTRIES.iter());
    all.extend(snapshot::ENTRIES.iter());
    all.extend(afek::ENTRIES.iter());
    all
}

pub fn entry(name: &str) -> CatalogResult<&'static ExampleEntry> {
    entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownSpec(name.to_string()))
}

/// `build(name, cfg)` on the named entry.
pub fn build(name: &str, cfg: &ModelConfig) -> CatalogResult<SpecDef> {
    entry(name)?.build(cfg)
}

/// A built low spec, its mapping, and the target built with the same model.
pub struct MappingSetup {
    pub low: SpecDef,
    pub mapping: RefinementMapping,
    pub high: SpecDef,
}

pub fn mapping_setup(spec: &str, mapping: &str, cfg: &ModelConfig) -> CatalogResult<MappingSetup> {
    let e = entry(spec)?;
    let m = e.mapping(mapping)?;
    let low = e.build(cfg)?;
    let high = entry(m.target)?.build(cfg)?;
    Ok(MappingSetup {
        mapping: (m.build)(&low),
        low,
        high,
    })
}

/// Every entry's name with its required parameters, for listings.
pub fn listing() -> BTreeMap<&'static str, &'static [&'static str]> {
    entries()
        .into_iter()
        .map(|e| (e.name, e.required_params))
        .collect()
}

// Helpers shared by the example modules.

pub(crate) fn not_int() -> Expr {
    lit(sentinel::not_int())
}

pub(crate) fn nat_range(cfg: &ModelConfig, bound: &str, lo: i64) -> CatalogResult<Expr> {
    let hi = cfg
        .constraint_bound(bound)?
        .ok_or_else(|| ConfigError::MissingParam(bound.to_string()))?;
    Ok(lit(Value::int_range(lo, hi)))
}

pub(crate) fn const_param(cfg: &ModelConfig, name: &str) -> CatalogResult<Expr> {
    Ok(lit(cfg.param(name)?.clone()))
}

pub(crate) fn ints(lo: i64, hi: i64) -> Vec<Value> {
    (lo..=hi).map(Value::int).collect()
}

pub(crate) fn atoms_v(names: &[&str]) -> Vec<Value> {
    names.iter().map(|n| Value::atom(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{count_states, Options};

    #[test]
    fn names_are_unique_and_targets_exist() {
        let all = entries();
        let mut names: Vec<_> = all.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), all.len());
        for e in &all {
            for m in e.mappings {
                assert!(entry(m.target).is_ok(), "{} -> {}", e.name, m.target);
            }
        }
    }

    #[test]
    fn every_entry_builds_and_explores_at_its_default() {
        for e in entries() {
            let spec = e.build_default().unwrap_or_else(|err| panic!("{}: {err}", e.name));
            let n = count_states(&spec, &Options::default().state_cap(2_000_000))
                .unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert!(n > 0, "{}", e.name);
        }
    }

    #[test]
    fn every_mapping_resolves_at_the_default() {
        for e in entries() {
            let cfg = (e.defaults)();
            for m in e.mappings {
                let ms = mapping_setup(e.name, m.name, &cfg).unwrap();
                ms.mapping
                    .resolve(&ms.low, &ms.high)
                    .unwrap_or_else(|err| panic!("{} {}: {err}", e.name, m.name));
            }
        }
    }

    #[test]
    fn named_predicates_build() {
        for e in entries() {
            let spec = e.build_default().unwrap();
            for p in e.invariants.iter().chain(e.targets) {
                let _ = (p.build)(&spec);
            }
            for a in e.action_props {
                let _ = (a.build)(&spec);
            }
        }
    }

    #[test]
    fn missing_params_and_unknown_names_are_errors() {
        assert!(matches!(
            build("MinMax1", &ModelConfig::new()),
            Err(CatalogError::MissingParam { .. })
        ));
        assert!(matches!(
            build("NoSuchSpec", &ModelConfig::new()),
            Err(CatalogError::UnknownSpec(_))
        ));
        assert!(entry("Hour").unwrap().mapping("nope").is_err());
        assert!(entry("Hour").unwrap().invariant("nope").is_err());
    }
}
