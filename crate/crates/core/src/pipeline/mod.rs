//! Per-question orchestration: translate, retrieve templates, link
//! mentions, then execute candidate queries until one yields an answer.

mod batch;
mod candidates;

pub use batch::{parse_questions, BatchInput, BatchOutput};
pub use candidates::{
    enumerate_candidates, is_answer, lenient_delexicalize, logical_form_literals,
    rank_combinations, Candidate,
};

use std::sync::Arc;

use log::{debug, info};
use serde::Serialize;
use thiserror::Error;

use crate::endpoint::{QueryExecutor, ResultSet};
use crate::eval::Answers;
use crate::linking::{extract_mentions, EntityCandidate, EntityType, LinkError, Linker, Mention};
use crate::sparql::{parse, serialize, Query, Term, Vocabulary};
use crate::templates::{delexicalize, Template, TemplateBase};
use crate::translator::Translator;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error("no template accepts the linked entities")]
    NoViableCandidate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub k_templates: usize,
    pub max_combinations_per_template: usize,
    /// Report only entities used by the chosen query.
    pub prune_unused_entities: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_templates: 3,
            max_combinations_per_template: 10,
            prune_unused_entities: false,
        }
    }
}

/// Source of ranked candidates for a mention.
pub trait MentionLinker: Send + Sync {
    fn classify(&self, mention: &Mention) -> EntityType;
    fn link(&self, mention: &Mention) -> Result<Vec<EntityCandidate>, LinkError>;
}

impl MentionLinker for Linker {
    fn classify(&self, mention: &Mention) -> EntityType {
        Linker::classify(self, mention)
    }

    fn link(&self, mention: &Mention) -> Result<Vec<EntityCandidate>, LinkError> {
        Linker::link(self, mention)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    NoAnswer,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Rejected,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriedQuery {
    /// Index into [`QAResult::forms`].
    pub form: usize,
    pub template_rank: usize,
    pub combination: Vec<usize>,
    pub query: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievedTemplate {
    pub rank: usize,
    pub score: f64,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkedMention {
    pub surface: String,
    pub entity_type: EntityType,
    pub candidates: Vec<EntityCandidate>,
    pub error: Option<String>,
}

/// What happened to one logical form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormTrace {
    pub logical_form: String,
    pub parsed: bool,
    pub templates: Vec<RetrievedTemplate>,
    pub mentions: Vec<LinkedMention>,
    /// Top entity per slot, in placeholder order (empty string when a
    /// mention has no candidate).
    pub top_entities: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QAResult {
    pub question_id: String,
    pub question: String,
    pub logical_form: Option<String>,
    pub translation_fallback: bool,
    pub forms: Vec<FormTrace>,
    pub tried_queries: Vec<TriedQuery>,
    pub chosen_query: Option<String>,
    pub answers: Option<Answers>,
    /// Entity IRIs reported for this question.
    pub entities: Vec<String>,
    pub status: Status,
    /// The chosen query was rejected but adopted as the first executed one.
    pub fallback_used: bool,
    pub message: Option<String>,
}

impl QAResult {
    fn failed(id: &str, question: &str, status: Status, message: String) -> Self {
        Self {
            question_id: id.to_string(),
            question: question.to_string(),
            logical_form: None,
            translation_fallback: false,
            forms: Vec::new(),
            tried_queries: Vec::new(),
            chosen_query: None,
            answers: None,
            entities: Vec::new(),
            status,
            fallback_used: false,
            message: Some(message),
        }
    }

    /// Answers as a scorable value; empty when unanswered.
    pub fn answers_or_empty(&self) -> Answers {
        self.answers.clone().unwrap_or(Answers::Values(Default::default()))
    }
}

pub struct Pipeline {
    translator: Arc<dyn Translator>,
    linker: Arc<dyn MentionLinker>,
    base: Arc<TemplateBase>,
    executor: Arc<dyn QueryExecutor>,
    vocab: Vocabulary,
    config: PipelineConfig,
}

struct Executed {
    trace: TriedQuery,
    result: Option<ResultSet>,
    entities: Vec<String>,
}

fn dedup(items: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for i in items {
        if !i.is_empty() && !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

impl Pipeline {
    pub fn new(
        translator: Arc<dyn Translator>,
        linker: Arc<dyn MentionLinker>,
        base: Arc<TemplateBase>,
        executor: Arc<dyn QueryExecutor>,
        vocab: Vocabulary,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        if config.k_templates == 0 {
            return Err(PipelineError::InvalidConfig("k_templates must be at least 1".into()));
        }
        if config.max_combinations_per_template == 0 {
            return Err(PipelineError::InvalidConfig(
                "max_combinations_per_template must be at least 1".into(),
            ));
        }
        Ok(Self {
            translator,
            linker,
            base,
            executor,
            vocab,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn entity_iris(&self, query: &Query) -> Vec<String> {
        let mut out = Vec::new();
        query.for_each_term(&mut |t| {
            if let Term::Iri(i) = t {
                if self.vocab.is_entity_iri(i.as_str()) {
                    out.push(i.as_str().to_string());
                }
            }
        });
        dedup(out)
    }

    /// Steps after translation for one logical form. Executed queries are
    /// appended to `executed`; returns true once one is accepted.
    fn run_form(&self, form: usize, text: &str, executed: &mut Vec<Executed>) -> (FormTrace, bool) {
        let mut trace = FormTrace {
            logical_form: text.to_string(),
            parsed: false,
            templates: Vec::new(),
            mentions: Vec::new(),
            top_entities: Vec::new(),
            error: None,
        };
        // Delexicalize the structured form, or scan the raw text when the
        // form does not parse; retrieval then repairs its structure.
        let (probe, slot_terms, mentions, literals) = match parse(text) {
            Ok(q) => {
                trace.parsed = true;
                let (template, slots) = delexicalize(&q, &self.vocab);
                (serialize(&template), slots, extract_mentions(&q), Some(logical_form_literals(&q)))
            }
            Err(e) => {
                debug!("logical form does not parse ({e}); using raw text for retrieval");
                let (probe, slots) = lenient_delexicalize(text, &self.vocab);
                let mentions = slots
                    .iter()
                    .filter_map(|s| match s {
                        Term::Mention(m) => Some(Mention {
                            surface: m.clone(),
                            context: None,
                        }),
                        _ => None,
                    })
                    .collect();
                (probe, slots, mentions, None)
            }
        };
        let retrieved = match self.base.top_k(&probe, self.config.k_templates) {
            Ok(r) => r,
            Err(e) => {
                trace.error = Some(format!("template retrieval failed: {e}"));
                return (trace, false);
            }
        };
        trace.templates = retrieved
            .iter()
            .enumerate()
            .map(|(i, s)| RetrievedTemplate {
                rank: i + 1,
                score: s.score,
                template: s.template.canonical_text.clone(),
            })
            .collect();

        let mut slots: Vec<Vec<Term>> = Vec::with_capacity(slot_terms.len());
        for term in &slot_terms {
            match term {
                Term::Mention(surface) => {
                    let mention = mentions
                        .iter()
                        .find(|m| &m.surface == surface)
                        .cloned()
                        .unwrap_or(Mention {
                            surface: surface.clone(),
                            context: None,
                        });
                    let entity_type = self.linker.classify(&mention);
                    let (candidates, error) = match self.linker.link(&mention) {
                        Ok(c) => (c, None),
                        Err(e) => (Vec::new(), Some(e.to_string())),
                    };
                    trace
                        .top_entities
                        .push(candidates.first().map(|c| c.iri.clone()).unwrap_or_default());
                    slots.push(candidates.iter().map(|c| Term::iri(&c.iri)).collect());
                    trace.mentions.push(LinkedMention {
                        surface: surface.clone(),
                        entity_type,
                        candidates,
                        error,
                    });
                }
                Term::Iri(i) => {
                    trace.top_entities.push(i.as_str().to_string());
                    slots.push(vec![term.clone()]);
                }
                // A placeholder left in a logical form has nothing to fill it.
                _ => {
                    trace.top_entities.push(String::new());
                    slots.push(Vec::new());
                }
            }
        }

        let templates: Vec<&Template> = retrieved.iter().map(|s| s.template).collect();
        let candidates = match enumerate_candidates(
            &templates,
            &slots,
            self.config.max_combinations_per_template,
            literals.as_deref(),
        ) {
            Ok(c) => c,
            Err(e) => {
                let unlinked: Vec<&str> = trace
                    .mentions
                    .iter()
                    .filter(|m| m.candidates.is_empty())
                    .map(|m| m.surface.as_str())
                    .collect();
                trace.error = Some(if unlinked.is_empty() {
                    format!("{e} ({} slots)", slots.len())
                } else {
                    format!("{e}: no candidates for {}", unlinked.join(", "))
                });
                return (trace, false);
            }
        };

        for c in candidates {
            let query_text = serialize(&c.query);
            let (outcome, result) = match self.executor.execute(&c.query) {
                Ok(rs) if is_answer(&rs, &c.query) => (Outcome::Accepted, Some(rs)),
                Ok(rs) => (Outcome::Rejected, Some(rs)),
                Err(e) => (Outcome::Failed(e.to_string()), None),
            };
            let accepted = outcome == Outcome::Accepted;
            executed.push(Executed {
                trace: TriedQuery {
                    form,
                    template_rank: c.template_rank,
                    combination: c.combination,
                    query: query_text,
                    outcome,
                },
                result,
                entities: self.entity_iris(&c.query),
            });
            if accepted {
                return (trace, true);
            }
        }
        (trace, false)
    }

    pub fn answer(&self, id: &str, question: &str) -> QAResult {
        let translation = match self.translator.translate(question) {
            Ok(t) => t,
            Err(e) => return QAResult::failed(id, question, Status::Error, e.to_string()),
        };
        let forms: Vec<&str> = std::iter::once(translation.logical_form.as_str())
            .chain(translation.alternatives.iter().map(String::as_str))
            .collect();
        let mut executed: Vec<Executed> = Vec::new();
        let mut traces = Vec::new();
        let mut accepted = false;
        for (i, form) in forms.iter().enumerate() {
            let (trace, done) = self.run_form(i, form, &mut executed);
            traces.push(trace);
            if done {
                accepted = true;
                break;
            }
        }

        let mut fallback_used = false;
        let chosen = if accepted {
            Some(executed.len() - 1)
        } else {
            let first = executed.iter().position(|e| e.result.is_some());
            if let Some(i) = first {
                executed[i].trace.outcome = Outcome::Accepted;
                fallback_used = true;
            }
            first
        };

        let (status, message) = match chosen {
            Some(_) => (Status::Answered, None),
            None => {
                let reasons: Vec<String> = traces
                    .iter()
                    .filter_map(|t| t.error.clone())
                    .chain(executed.iter().filter_map(|e| match &e.trace.outcome {
                        Outcome::Failed(m) => Some(m.clone()),
                        _ => None,
                    }))
                    .collect();
                let message = if reasons.is_empty() {
                    "every candidate query was rejected".to_string()
                } else {
                    reasons.join("; ")
                };
                (Status::NoAnswer, Some(message))
            }
        };
        let chosen_form = chosen.map_or(0, |i| executed[i].trace.form);
        let entities = match (self.config.prune_unused_entities, chosen) {
            (true, Some(i)) => executed[i].entities.clone(),
            (true, None) => Vec::new(),
            (false, _) => traces
                .get(chosen_form)
                .map(|t| dedup(t.top_entities.iter().cloned()))
                .unwrap_or_default(),
        };
        let result = QAResult {
            question_id: id.to_string(),
            question: question.to_string(),
            logical_form: Some(translation.logical_form.clone()),
            translation_fallback: translation.used_fallback,
            forms: traces,
            chosen_query: chosen.map(|i| executed[i].trace.query.clone()),
            answers: chosen.and_then(|i| executed[i].result.as_ref().map(Answers::from_result)),
            entities,
            status,
            fallback_used,
            message,
            tried_queries: executed.into_iter().map(|e| e.trace).collect(),
        };
        info!(
            "{id}: {:?} after {} queries",
            result.status,
            result.tried_queries.len()
        );
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoint::{Graph, LocalGraph, Node};
    use crate::translator::{Backend, TranslateError, TranslationResult};
    use std::collections::BTreeMap;

    const AUTHORED: &str = "https://dblp.org/rdf/schema#authoredBy";

    struct Fixed(Vec<String>);

    impl Translator for Fixed {
        fn translate(&self, _: &str) -> Result<TranslationResult, TranslateError> {
            Ok(TranslationResult {
                logical_form: self.0[0].clone(),
                alternatives: self.0[1..].to_vec(),
                backend: Backend::Neural,
                used_fallback: false,
            })
        }
    }

    struct Table(BTreeMap<String, Vec<&'static str>>);

    impl MentionLinker for Table {
        fn classify(&self, _: &Mention) -> EntityType {
            EntityType::Author
        }
        fn link(&self, m: &Mention) -> Result<Vec<EntityCandidate>, LinkError> {
            let iris = self.0.get(&m.surface).ok_or(LinkError::NoCandidates {
                surface: m.surface.clone(),
            })?;
            Ok(iris
                .iter()
                .enumerate()
                .map(|(i, iri)| EntityCandidate {
                    iri: iri.to_string(),
                    label: m.surface.clone(),
                    rank: i as u32 + 1,
                    entity_type: EntityType::Author,
                })
                .collect())
        }
    }

    fn pipeline(forms: &[&str], links: &[(&str, Vec<&'static str>)], graph: Graph) -> Pipeline {
        let vocab = Vocabulary::dblp_default();
        let (base, _) = TemplateBase::build(
            [("t1", format!("SELECT COUNT(DISTINCT ?answer) AS ?count WHERE {{ ?answer <{AUTHORED}> <https://dblp.org/pid/1> . ?answer <{AUTHORED}> <https://dblp.org/pid/2> . }}"))],
            &vocab,
        );
        Pipeline::new(
            Arc::new(Fixed(forms.iter().map(|s| s.to_string()).collect())),
            Arc::new(Table(links.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())),
            Arc::new(base),
            Arc::new(LocalGraph(graph)),
            vocab,
            PipelineConfig::default(),
        )
        .unwrap()
    }

    fn coauthored() -> Graph {
        let mut g = Graph::new();
        g.add("https://dblp.org/rec/p", AUTHORED, Node::iri("https://dblp.org/pid/b"));
        g.add("https://dblp.org/rec/p", AUTHORED, Node::iri("https://dblp.org/pid/c"));
        g
    }

    #[test]
    fn second_candidate_accepted() {
        let lf = format!("SELECT COUNT(DISTINCT ?answer) AS ?count WHERE {{ ?answer <{AUTHORED}> <A> . ?answer <{AUTHORED}> <C> . }}");
        let p = pipeline(
            &[&lf],
            &[("A", vec!["https://dblp.org/pid/a", "https://dblp.org/pid/b"]), ("C", vec!["https://dblp.org/pid/c"])],
            coauthored(),
        );
        let r = p.answer("q", "?");
        assert_eq!(r.status, Status::Answered);
        assert_eq!(r.answers, Some(Answers::Values(["1".to_string()].into())));
        let outcomes: Vec<_> = r.tried_queries.iter().map(|t| t.outcome.clone()).collect();
        assert_eq!(outcomes, [Outcome::Rejected, Outcome::Accepted]);
        assert!(!r.fallback_used);
        assert_eq!(r.entities, ["https://dblp.org/pid/a", "https://dblp.org/pid/c"]);
    }

    #[test]
    fn zero_count_falls_back_to_first() {
        let lf = format!("SELECT COUNT(DISTINCT ?answer) AS ?count WHERE {{ ?answer <{AUTHORED}> <A> . ?answer <{AUTHORED}> <C> . }}");
        let p = pipeline(&[&lf], &[("A", vec!["https://dblp.org/pid/x"]), ("C", vec!["https://dblp.org/pid/c"])], coauthored());
        let r = p.answer("q", "?");
        assert_eq!(r.status, Status::Answered);
        assert!(r.fallback_used);
        assert_eq!(r.answers, Some(Answers::Values(["0".to_string()].into())));
        assert_eq!(r.tried_queries[0].outcome, Outcome::Accepted);
    }

    #[test]
    fn unparsable_form_is_repaired() {
        let broken = format!("SELECT COUNT(DISTINCT ?answer AS ?count WHERE {{ ?answer <{AUTHORED}> <A> . ?answer <{AUTHORED}> <C> }}");
        let p = pipeline(&[&broken], &[("A", vec!["https://dblp.org/pid/b"]), ("C", vec!["https://dblp.org/pid/c"])], coauthored());
        let r = p.answer("q", "?");
        assert!(!r.forms[0].parsed);
        assert_eq!(r.status, Status::Answered);
    }

    #[test]
    fn unlinked_mentions_explain_failure() {
        let lf = format!("SELECT COUNT(DISTINCT ?answer) AS ?count WHERE {{ ?answer <{AUTHORED}> <A> . ?answer <{AUTHORED}> <C> . }}");
        let p = pipeline(&[&lf], &[], coauthored());
        let r = p.answer("q", "?");
        assert_eq!(r.status, Status::NoAnswer);
        assert!(r.message.unwrap().contains("no candidates for A, C"));
        assert!(r.tried_queries.is_empty());
    }

    #[test]
    fn beams_tried_after_primary() {
        let bad = format!("SELECT COUNT(DISTINCT ?answer) AS ?count WHERE {{ ?answer <{AUTHORED}> <Z> . ?answer <{AUTHORED}> <C> . }}");
        let good = format!("SELECT COUNT(DISTINCT ?answer) AS ?count WHERE {{ ?answer <{AUTHORED}> <B> . ?answer <{AUTHORED}> <C> . }}");
        let p = pipeline(&[&bad, &good], &[("B", vec!["https://dblp.org/pid/b"]), ("C", vec!["https://dblp.org/pid/c"])], coauthored());
        let r = p.answer("q", "?");
        assert_eq!(r.status, Status::Answered);
        assert_eq!(r.forms.len(), 2);
        assert_eq!(r.tried_queries.last().unwrap().form, 1);
        assert_eq!(r.entities, ["https://dblp.org/pid/b", "https://dblp.org/pid/c"]);
    }
}
