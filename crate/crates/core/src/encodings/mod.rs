//! Compilers from classic formalisms to SPS programs, each with a direct
//! simulator of the source formalism to compare against.
//!
//! Descriptions are TOML documents; see the `fixtures` directory for one
//! of each kind.

pub mod axioms;
pub mod cellular;
pub mod pcfg;
pub mod transition;
pub mod turing;

use crate::program::Program;
use crate::structure::StructureError;

/// Description kinds accepted by [`compile`].
pub const KINDS: [&str; 5] = ["ts", "tm", "axioms", "ca", "pcfg"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodingError {
    #[error("invalid description: {0}")]
    Invalid(String),
    #[error("cannot read description: {0}")]
    Format(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Compiles a TOML description of the given kind (one of [`KINDS`]).
pub fn compile(kind: &str, src: &str) -> Result<Program, EncodingError> {
    match kind {
        "ts" => transition::compile_transition_system(&transition::TransitionSystemDesc::from_toml(src)?),
        "tm" => turing::compile_turing(&turing::TuringDesc::from_toml(src)?),
        "axioms" => axioms::compile_axioms(&axioms::AxiomSystemDesc::from_toml(src)?),
        "ca" => cellular::compile_cellular(&cellular::CellularDesc::from_toml(src)?),
        "pcfg" => pcfg::compile_pcfg(&pcfg::PcfgDesc::from_toml(src)?),
        other => invalid(format!("unknown kind `{other}`; expected one of {}", KINDS.join(", "))),
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, EncodingError> {
    Err(EncodingError::Invalid(msg.into()))
}

pub(crate) fn from_toml<T: serde::de::DeserializeOwned>(src: &str) -> Result<T, EncodingError> {
    toml::from_str(src).map_err(|e| EncodingError::Format(e.to_string()))
}

/// Names must be usable as DSL identifiers and must not shadow builtins.
pub(crate) fn check_name(what: &str, name: &str) -> Result<(), EncodingError> {
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(name, "if" | "then" | "else" | "and" | "not" | "where")
        && !crate::structure::Structure::is_builtin_name(name);
    if ok {
        Ok(())
    } else {
        invalid(format!("{what} `{name}` is not a usable name"))
    }
}

pub(crate) fn check_distinct<'a>(what: &str, names: impl IntoIterator<Item = &'a String>) -> Result<(), EncodingError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return invalid(format!("{what} `{n}` listed twice"));
        }
    }
    Ok(())
}
