//! The SPARQL subset and its logical-form dialect: lexing, parsing,
//! canonical serialization and the relation vocabulary.

mod ast;
mod parser;
mod token;
mod vocab;
mod write;

pub use ast::*;
pub use parser::parse;
pub use token::{join_tokens, normalize, placeholder_index, tokenize, SparqlToken, TokenKind, KEYWORDS};
pub use vocab::{special_token_vocabulary, Vocabulary, DEFAULT_RELATIONS, DEFAULT_SCHEMA_PREFIXES};
pub use write::{serialize, serialize_standard};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("unterminated `<` at offset {offset}")]
    UnterminatedBracket { offset: usize },
    #[error("unterminated string literal at offset {offset}")]
    UnterminatedString { offset: usize },
    #[error("illegal character {ch:?} at offset {offset}")]
    IllegalCharacter { ch: char, offset: usize },
    #[error("empty `<>` at offset {offset}")]
    EmptyBracket { offset: usize },
    #[error("syntax error at offset {offset}: found `{found}`, expected one of {expected:?}")]
    Syntax {
        found: String,
        offset: usize,
        expected: Vec<String>,
    },
    #[error("unsupported construct {construct} at offset {offset}")]
    UnsupportedConstruct { construct: String, offset: usize },
    #[error("variable {variable} is not bound by any triple pattern")]
    UnboundVariable { variable: String },
    #[error("relation set is empty")]
    EmptyRelationSet,
    #[error("not a valid IRI: {iri}")]
    InvalidIri { iri: String },
}
