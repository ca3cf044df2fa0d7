//! OpenAPI 2.0 document model.
//!
//! [`parse_document`] turns JSON text into an [`ApiDescription`] whose
//! invariants (path placeholders, reference targets, status keys) have been
//! checked. The model is immutable once built.

mod model;
mod parse;

use std::time::Duration;

pub use model::*;
pub use parse::{parse_document, placeholders, ParseError, Violation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("unknown reference #/definitions/{0}")]
    UnknownReference(String),
    #[error("cyclic reference chain {}", .0.join(" -> "))]
    CyclicReference(Vec<String>),
}

/// Follows `#/definitions/<name>` references until a concrete schema is reached.
pub fn resolve_reference<'a>(
    api: &'a ApiDescription,
    name: &str,
) -> Result<&'a DataSchema, ResolveError> {
    let mut chain: Vec<String> = Vec::new();
    let mut current = name.to_string();
    loop {
        if let Some(pos) = chain.iter().position(|n| *n == current) {
            return Err(ResolveError::CyclicReference(chain[pos..].to_vec()));
        }
        let schema = api
            .definitions
            .get(&current)
            .ok_or_else(|| ResolveError::UnknownReference(current.clone()))?;
        chain.push(current);
        match schema {
            DataSchema::Reference { name } => current = name.clone(),
            concrete => return Ok(concrete),
        }
    }
}

/// All operations, ordered by path template and then verb name.
pub fn list_operations(api: &ApiDescription) -> Vec<&OperationSpec> {
    api.paths.values().flat_map(|ops| ops.values()).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot fetch {url}: {message}")]
    Fetch { url: String, message: String },
}

/// Reads a document from a local path or fetches it with an HTTP(S) GET.
pub fn load_document(source: &str) -> Result<String, LoadError> {
    if source.starts_with("http://") || source.starts_with("https://") {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        let fetch_err = |message: String| LoadError::Fetch {
            url: source.to_string(),
            message,
        };
        let mut resp = agent.get(source).call().map_err(|e| fetch_err(e.to_string()))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| fetch_err(e.to_string()))
    } else {
        std::fs::read_to_string(source).map_err(|source_err| LoadError::Io {
            path: source.to_string(),
            source: source_err,
        })
    }
}
