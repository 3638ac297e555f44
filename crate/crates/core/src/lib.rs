//! Explicit-state checking of TLA+-style specifications extended with
//! history, prophecy and stuttering variables.
//!
//! Specifications are built programmatically (see [`catalog`]) from
//! [`expr`] expressions and [`spec`] subaction steps, then explored
//! breadth-first by [`explorer`]. The [`history`], [`prophecy`] and
//! [`stuttering`] modules add auxiliary variables to an existing spec and
//! check the side conditions under which doing so is sound.

pub mod catalog;
pub mod config;
pub mod encode;
pub mod explorer;
pub mod expr;
pub mod history;
pub mod prophecy;
pub mod spec;
pub mod stuttering;
pub mod value;

pub use config::{ConfigError, ModelConfig};
pub use spec::{RefinementMapping, SpecDef, SpecError, State};
pub use value::Value;
