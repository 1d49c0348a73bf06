use rayon::prelude::*;
use serde_json::Value;

use crate::eval::dataset::record_from_json;
use crate::eval::{answers_to_json, AnswerEntry, EntityEntry, EvalError};

use super::{Pipeline, QAResult, Status};

/// One record of a questions file. A record that could not be read keeps
/// its reason so the batch can report it without stopping.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchInput {
    pub id: String,
    pub question: Result<String, String>,
}

/// Reads a questions file (same shapes as a dataset). Only a file that is
/// not JSON or has no question list is an error.
pub fn parse_questions(text: &str, origin: &str) -> Result<Vec<BatchInput>, EvalError> {
    let format = |reason: String| EvalError::Format {
        path: origin.to_string(),
        index: None,
        reason,
    };
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let value: Value = serde_json::from_str(text).map_err(|e| format(e.to_string()))?;
    let items = match &value {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("questions")
            .and_then(Value::as_array)
            .ok_or_else(|| format("expected a list or an object with `questions`".into()))?,
        _ => return Err(format("expected a list or an object with `questions`".into())),
    };
    Ok(items
        .iter()
        .enumerate()
        .map(|(i, item)| match record_from_json(item) {
            Ok(r) => BatchInput {
                id: r.id,
                question: Ok(r.question),
            },
            Err(reason) => BatchInput {
                id: item
                    .get("id")
                    .and_then(|v| v.as_str().map(str::to_string).or_else(|| v.as_u64().map(|n| n.to_string())))
                    .unwrap_or_else(|| format!("record-{i}")),
                question: Err(reason),
            },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub results: Vec<QAResult>,
}

impl BatchOutput {
    pub fn answer_entries(&self) -> Vec<AnswerEntry> {
        self.results
            .iter()
            .map(|r| AnswerEntry {
                id: r.question_id.clone(),
                answers: r.answers_or_empty(),
            })
            .collect()
    }

    pub fn entity_entries(&self) -> Vec<EntityEntry> {
        self.results
            .iter()
            .map(|r| EntityEntry {
                id: r.question_id.clone(),
                entities: r.entities.clone(),
            })
            .collect()
    }

    pub fn answers_json(&self) -> Value {
        answers_to_json(&self.answer_entries())
    }

    pub fn count(&self, status: Status) -> usize {
        self.results.iter().filter(|r| r.status == status).count()
    }
}

impl Pipeline {
    /// Answers every input, in parallel, keeping input order.
    pub fn batch(&self, inputs: &[BatchInput]) -> BatchOutput {
        let results = inputs
            .par_iter()
            .map(|input| match &input.question {
                Ok(q) => self.answer(&input.id, q),
                Err(reason) => QAResult::failed(&input.id, "", Status::Error, format!("malformed record: {reason}")),
            })
            .collect();
        BatchOutput { results }
    }
}
