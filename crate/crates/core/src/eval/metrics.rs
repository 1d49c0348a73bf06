use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dataset::{AnswerEntry, EntityEntry, GoldRecord};
use super::EvalError;

/// Reference scores shown for context in the submission table.
pub const REFERENCE_ROW: (&str, f64, f64) = ("ID-557036 (reference)", 0.7961, 0.8488);

/// Precision, recall and F1 of one predicted set against a gold set.
///
/// Elements are trimmed before comparison. An empty side scores 1 against
/// an empty side and 0 otherwise.
pub fn score_sets<S: AsRef<str> + Ord>(predicted: &BTreeSet<S>, gold: &BTreeSet<S>) -> (f64, f64, f64) {
    let p: BTreeSet<&str> = predicted.iter().map(|s| s.as_ref().trim()).collect();
    let g: BTreeSet<&str> = gold.iter().map(|s| s.as_ref().trim()).collect();
    let hits = p.intersection(&g).count() as f64;
    let ratio = |denominator: usize, other_empty: bool| {
        if denominator == 0 {
            if other_empty { 1.0 } else { 0.0 }
        } else {
            hits / denominator as f64
        }
    };
    let precision = ratio(p.len(), g.is_empty());
    let recall = ratio(g.len(), p.is_empty());
    (precision, recall, f1(precision, recall))
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_question: Vec<QuestionScore>,
}

impl Metrics {
    /// Macro average over the per-question scores (all zero when empty).
    pub fn from_scores(per_question: Vec<QuestionScore>) -> Self {
        let n = per_question.len().max(1) as f64;
        let mean = |f: fn(&QuestionScore) -> f64| per_question.iter().map(f).sum::<f64>() / n;
        Self {
            precision: mean(|q| q.precision),
            recall: mean(|q| q.recall),
            f1: mean(|q| q.f1),
            per_question,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub entity_linking: Metrics,
    pub question_answering: Metrics,
}

/// Scores both tasks, in gold order. Predictions for unknown ids are an
/// error; gold questions without a prediction score zero.
pub fn evaluate_run(
    answers: &[AnswerEntry],
    entities: &[EntityEntry],
    gold: &[GoldRecord],
) -> Result<EvalReport, EvalError> {
    let gold_ids: BTreeSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    let unknown: BTreeSet<String> = answers
        .iter()
        .map(|a| a.id.as_str())
        .chain(entities.iter().map(|e| e.id.as_str()))
        .filter(|id| !gold_ids.contains(id))
        .map(str::to_string)
        .collect();
    if !unknown.is_empty() {
        return Err(EvalError::IdMismatch {
            ids: unknown.into_iter().collect(),
        });
    }
    let answer_by_id: BTreeMap<&str, BTreeSet<String>> =
        answers.iter().map(|a| (a.id.as_str(), a.answers.as_set())).collect();
    let entities_by_id: BTreeMap<&str, BTreeSet<String>> = entities
        .iter()
        .map(|e| (e.id.as_str(), e.entities.iter().cloned().collect()))
        .collect();
    let score = |id: &str, pred: Option<&BTreeSet<String>>, gold: BTreeSet<String>| {
        let (precision, recall, f1) = match pred {
            Some(p) => score_sets(p, &gold),
            None => (0.0, 0.0, 0.0),
        };
        QuestionScore {
            id: id.to_string(),
            precision,
            recall,
            f1,
        }
    };
    let mut el = Vec::with_capacity(gold.len());
    let mut qa = Vec::with_capacity(gold.len());
    for g in gold {
        el.push(score(&g.id, entities_by_id.get(g.id.as_str()), g.gold_entities.clone()));
        let gold_answers = g.gold_answers.as_ref().map(|a| a.as_set()).unwrap_or_default();
        qa.push(score(&g.id, answer_by_id.get(g.id.as_str()), gold_answers));
    }
    Ok(EvalReport {
        entity_linking: Metrics::from_scores(el),
        question_answering: Metrics::from_scores(qa),
    })
}

/// The printed report: one line per task, then the submission table.
pub fn render_report(report: &EvalReport) -> String {
    let el = &report.entity_linking;
    let qa = &report.question_answering;
    let mut out = String::new();
    for (task, m) in [("QA", qa), ("EL", el)] {
        let _ = writeln!(
            out,
            "{task} F1 {:.4}  P {:.4}  R {:.4}  ({} questions)",
            m.f1,
            m.precision,
            m.recall,
            m.per_question.len()
        );
    }
    out.push('\n');
    let _ = writeln!(out, "{:<24}{:>8}{:>8}", "Submission", "F1 EL", "F1 QA");
    let _ = writeln!(out, "{:<24}{:>8.4}{:>8.4}", "this run", el.f1, qa.f1);
    let (name, ref_el, ref_qa) = REFERENCE_ROW;
    let _ = writeln!(out, "{name:<24}{ref_el:>8.4}{ref_qa:>8.4}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Answers;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_values() {
        let (p, r, f) = score_sets(&set(&["a"]), &set(&["a", "b"]));
        assert_eq!((p, r), (1.0, 0.5));
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(score_sets(&set(&[]), &set(&[])), (1.0, 1.0, 1.0));
        assert_eq!(score_sets(&set(&[]), &set(&["a"])), (0.0, 0.0, 0.0));
        assert_eq!(score_sets(&set(&[" a "]), &set(&["a"])), (1.0, 1.0, 1.0));
    }

    fn gold(id: &str, answers: &[&str]) -> GoldRecord {
        GoldRecord {
            id: id.into(),
            question: String::new(),
            paraphrases: vec![],
            gold_query: None,
            gold_entities: set(&["e"]),
            gold_answers: Some(Answers::Values(set(answers))),
        }
    }

    #[test]
    fn half_answered_macro_average() {
        let g = vec![gold("1", &["x"]), gold("2", &["y"])];
        let answers = vec![
            AnswerEntry { id: "1".into(), answers: Answers::Values(set(&["x"])) },
            AnswerEntry { id: "2".into(), answers: Answers::Values(set(&[])) },
        ];
        let report = evaluate_run(&answers, &[], &g).unwrap();
        assert_eq!(report.question_answering.f1, 0.5);
        assert_eq!(report.entity_linking.f1, 0.0);
        let text = render_report(&report);
        assert!(text.starts_with("QA F1 0.5000"));
        assert!(text.contains("ID-557036 (reference)     0.7961  0.8488"));
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), report);
    }

    #[test]
    fn unknown_ids() {
        let answers = vec![AnswerEntry { id: "zz".into(), answers: Answers::Boolean(true) }];
        assert_eq!(
            evaluate_run(&answers, &[], &[gold("1", &[])]),
            Err(EvalError::IdMismatch { ids: vec!["zz".into()] })
        );
    }
}
