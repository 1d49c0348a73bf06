//! DBLP-QuAD style datasets and the two submission files.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::endpoint::ResultSet;

use super::EvalError;

/// An answer: a set of IRIs or literal values, or a truth value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answers {
    Boolean(bool),
    Values(BTreeSet<String>),
}

impl Answers {
    /// The set used for scoring; booleans become `{"true"}` or `{"false"}`.
    pub fn as_set(&self) -> BTreeSet<String> {
        match self {
            Answers::Values(v) => v.clone(),
            Answers::Boolean(b) => BTreeSet::from([b.to_string()]),
        }
    }

    pub fn from_result(result: &ResultSet) -> Self {
        match result {
            ResultSet::Boolean(b) => Answers::Boolean(*b),
            rs => Answers::Values(rs.answer_values()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldRecord {
    pub id: String,
    pub question: String,
    pub paraphrases: Vec<String>,
    pub gold_query: Option<String>,
    pub gold_entities: BTreeSet<String>,
    pub gold_answers: Option<Answers>,
}

fn strip_brackets(s: &str) -> String {
    let t = s.trim();
    t.strip_prefix('<')
        .and_then(|x| x.strip_suffix('>'))
        .unwrap_or(t)
        .to_string()
}

/// A string, or an object holding the string under `key`.
fn string_field(v: Option<&Value>, key: &str) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Object(o) => o.get(key).and_then(Value::as_str).map(str::to_string),
        _ => None,
    }
}

fn parse_answers(v: &Value) -> Result<Answers, String> {
    match v {
        Value::Bool(b) => Ok(Answers::Boolean(*b)),
        Value::Array(items) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                Value::Bool(b) => Ok(b.to_string()),
                other => Err(format!("unsupported answer value {other}")),
            })
            .collect::<Result<_, _>>()
            .map(Answers::Values),
        Value::Object(_) => ResultSet::from_json(v)
            .map(|rs| Answers::from_result(&rs))
            .map_err(|e| e.to_string()),
        other => Err(format!("unsupported answer {other}")),
    }
}

pub(crate) fn record_from_json(v: &Value) -> Result<GoldRecord, String> {
    let obj = v.as_object().ok_or("record is not an object")?;
    let id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err("missing id".into()),
    };
    let question = string_field(obj.get("question"), "string").ok_or("missing question")?;
    let paraphrases = match obj.get("paraphrased_question") {
        Some(Value::Array(a)) => a.iter().filter_map(|p| string_field(Some(p), "string")).collect(),
        p => string_field(p, "string").into_iter().collect(),
    };
    let gold_query = string_field(obj.get("query"), "sparql");
    let gold_entities = match obj.get("entities") {
        None | Some(Value::Null) => BTreeSet::new(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|e| e.as_str().map(strip_brackets).ok_or("entity is not a string"))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err("entities is not a list".into()),
    };
    let gold_answers = match obj.get("answer").or_else(|| obj.get("answers")) {
        None | Some(Value::Null) => None,
        Some(a) => Some(parse_answers(a)?),
    };
    Ok(GoldRecord {
        id,
        question,
        paraphrases,
        gold_query,
        gold_entities,
        gold_answers,
    })
}

/// Parses a dataset: a top-level list or `{"questions": [...]}`. Unknown
/// fields are ignored.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Vec<GoldRecord>, EvalError> {
    let format = |index: Option<usize>, reason: String| EvalError::Format {
        path: origin.to_string(),
        index,
        reason,
    };
    let value: Value = serde_json::from_str(text).map_err(|e| format(None, e.to_string()))?;
    let items = match &value {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("questions")
            .and_then(Value::as_array)
            .ok_or_else(|| format(None, "expected a list or an object with `questions`".into()))?,
        _ => return Err(format(None, "expected a list or an object with `questions`".into())),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let record = record_from_json(item).map_err(|r| format(Some(i), r))?;
        if !seen.insert(record.id.clone()) {
            return Err(format(Some(i), format!("duplicate id {}", record.id)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<GoldRecord>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, &path.display().to_string())
}

/// One entry of the answers submission file.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerEntry {
    pub id: String,
    pub answers: Answers,
}

/// One entry of the entity-linking submission file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityEntry {
    pub id: String,
    pub entities: Vec<String>,
}

pub fn answers_to_json(entries: &[AnswerEntry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| match &e.answers {
                Answers::Boolean(b) => json!({ "id": e.id, "answer": b }),
                Answers::Values(v) => json!({ "id": e.id, "answers": v }),
            })
            .collect(),
    )
}

pub fn answers_from_json(value: &Value, origin: &str) -> Result<Vec<AnswerEntry>, EvalError> {
    let format = |index: Option<usize>, reason: String| EvalError::Format {
        path: origin.to_string(),
        index,
        reason,
    };
    let items = value.as_array().ok_or_else(|| format(None, "expected a list".into()))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let id = item
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| format(Some(i), "missing id".into()))?;
            let raw = item
                .get("answers")
                .or_else(|| item.get("answer"))
                .ok_or_else(|| format(Some(i), "missing answers".into()))?;
            let answers = parse_answers(raw).map_err(|r| format(Some(i), r))?;
            Ok(AnswerEntry {
                id: id.to_string(),
                answers,
            })
        })
        .collect()
}

/// Pretty JSON with a trailing newline; the byte layout is stable.
pub fn to_pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

pub fn read_answers_file(path: &Path) -> Result<Vec<AnswerEntry>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| EvalError::Format {
        path: path.display().to_string(),
        index: None,
        reason: e.to_string(),
    })?;
    answers_from_json(&value, &path.display().to_string())
}

pub fn read_entities_file(path: &Path) -> Result<Vec<EntityEntry>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let mut entries: Vec<EntityEntry> = serde_json::from_str(&text).map_err(|e| EvalError::Format {
        path: path.display().to_string(),
        index: None,
        reason: e.to_string(),
    })?;
    for e in &mut entries {
        for iri in &mut e.entities {
            *iri = strip_brackets(iri);
        }
    }
    Ok(entries)
}
