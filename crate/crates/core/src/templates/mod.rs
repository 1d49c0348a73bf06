//! Template base: delexicalized training queries and similarity retrieval.

mod base;
mod delex;
mod similarity;

pub use base::{ScoredTemplate, SkippedQuery, Template, TemplateBase};
pub use delex::{delexicalize, is_entity_term, max_placeholder, relexicalize};
pub use similarity::{edit_distance, similarity};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template needs {placeholders} terms but {terms} were given")]
    ArityMismatch { placeholders: usize, terms: usize },
    #[error("template base is empty")]
    EmptyBase,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("template base line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("{0}")]
    Io(String),
}
