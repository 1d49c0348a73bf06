//! Question to logical form. Two backends share one trait: a retrieval
//! baseline needing no model, and a client for an external model server.

mod baseline;
mod neural;
mod spans;

pub use baseline::BaselineTranslator;
pub use neural::{from_response, NeuralTranslator, TranslateRequest, TranslateResponse};
pub use spans::{entity_spans, years, Span};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Baseline,
    Neural,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslationResult {
    pub logical_form: String,
    /// Further candidate forms, best first, never repeating `logical_form`.
    pub alternatives: Vec<String>,
    pub backend: Backend,
    /// Set when some slot was filled from the training neighbour rather
    /// than from the question.
    pub used_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("the baseline index is empty")]
    EmptyIndex,
    #[error("translation backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed response from translation server: {0}")]
    MalformedServerResponse(String),
}

pub trait Translator: Send + Sync {
    fn translate(&self, question: &str) -> Result<TranslationResult, TranslateError>;
}
