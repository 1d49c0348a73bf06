//! Dataset loading and precision/recall/F1 scoring for entity linking and
//! question answering.

pub(crate) mod dataset;
mod metrics;

pub use dataset::{
    answers_from_json, answers_to_json, load_dataset, parse_dataset, read_answers_file,
    read_entities_file, to_pretty, AnswerEntry, Answers, EntityEntry, GoldRecord,
};
pub use metrics::{
    evaluate_run, f1, render_report, score_sets, EvalReport, Metrics, QuestionScore, REFERENCE_ROW,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{path}{}: {reason}", index.map(|i| format!(" (record {i})")).unwrap_or_default())]
    Format {
        path: String,
        index: Option<usize>,
        reason: String,
    },
    #[error("predictions for ids not in the gold data: {}", ids.join(", "))]
    IdMismatch { ids: Vec<String> },
    #[error("{0}")]
    Io(String),
}
