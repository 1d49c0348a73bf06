use crate::sparql::{parse, serialize, Literal, Query, Term, Vocabulary};
use crate::templates::{delexicalize, max_placeholder, relexicalize, similarity, TemplateBase};

use super::spans::{entity_spans, years};
use super::{Backend, TranslateError, TranslationResult, Translator};

#[derive(Debug, Clone)]
struct IndexEntry {
    question: String,
    probe: String,
    template: Query,
    frequency: u32,
    /// Slot fillers used when the input question yields too few spans:
    /// the neighbour's own spans when they match the slot count, else its
    /// gold entity IRIs.
    fillers: Vec<Term>,
}

/// Nearest-neighbour translation over the training questions: the most
/// similar question's template is refilled with spans from the input.
#[derive(Debug, Clone, Default)]
pub struct BaselineTranslator {
    entries: Vec<IndexEntry>,
}

fn probe_text(question: &str) -> String {
    question.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Turns a span into text the lexer reads back as one mention.
fn mention_text(span: &str) -> String {
    span.chars()
        .filter(|c| !matches!(c, '<' | '>' | '\n' | '\r'))
        .collect::<String>()
        .trim_start_matches(|c: char| c.is_whitespace() || "=?$(\"'".contains(c))
        .trim_end()
        .to_string()
}

fn mention_terms(question: &str) -> Vec<Term> {
    entity_spans(question)
        .into_iter()
        .map(|s| mention_text(&s.text))
        .filter(|t| !t.is_empty())
        .map(Term::Mention)
        .collect()
}

fn is_year(literal: &Literal) -> bool {
    let v = literal.lexical();
    v.len() == 4 && v.chars().all(|c| c.is_ascii_digit())
}

fn with_lexical(literal: &Literal, value: &str) -> Literal {
    match literal {
        Literal::String { datatype, .. } => Literal::String {
            value: value.to_string(),
            datatype: datatype.clone(),
        },
        Literal::Numeric(_) => Literal::Numeric(value.to_string()),
    }
}

impl BaselineTranslator {
    /// Indexes `(question, gold query)` pairs. Queries that do not parse
    /// are skipped; the count of skipped pairs is returned alongside.
    pub fn build<I, Q, S>(pairs: I, base: &TemplateBase, vocab: &Vocabulary) -> (Self, usize)
    where
        I: IntoIterator<Item = (Q, S)>,
        Q: AsRef<str>,
        S: AsRef<str>,
    {
        let mut entries = Vec::new();
        let mut skipped = 0;
        for (question, query) in pairs {
            let question = question.as_ref();
            let Ok(parsed) = parse(query.as_ref()) else {
                skipped += 1;
                continue;
            };
            let (template, gold_terms) = delexicalize(&parsed, vocab);
            let frequency = base.get(&serialize(&template)).map_or(0, |t| t.frequency);
            let spans = mention_terms(question);
            let fillers = if spans.len() == gold_terms.len() { spans } else { gold_terms };
            entries.push(IndexEntry {
                question: question.to_string(),
                probe: probe_text(question),
                template,
                frequency,
                fillers,
            });
        }
        (Self { entries }, skipped)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn nearest(&self, probe: &str) -> Option<&IndexEntry> {
        let scored = self.entries.iter().map(|e| (similarity(probe, &e.probe), e));
        scored
            .max_by(|(sa, a), (sb, b)| {
                sa.total_cmp(sb)
                    .then(a.frequency.cmp(&b.frequency))
                    .then_with(|| b.question.cmp(&a.question))
            })
            .map(|(_, e)| e)
    }
}

impl Translator for BaselineTranslator {
    fn translate(&self, question: &str) -> Result<TranslationResult, TranslateError> {
        if question.trim().is_empty() {
            return Err(TranslateError::EmptyQuestion);
        }
        let neighbour = self.nearest(&probe_text(question)).ok_or(TranslateError::EmptyIndex)?;
        let slots = max_placeholder(&neighbour.template);
        let spans = mention_terms(question);
        let used_fallback = spans.len() < slots;
        let fillers: Vec<Term> = (0..slots)
            .map(|i| spans.get(i).unwrap_or(&neighbour.fillers[i]).clone())
            .collect();
        let mut form = relexicalize(&neighbour.template, &fillers)
            .expect("fillers cover every placeholder");
        let mut question_years = years(question).into_iter();
        form.map_terms(&mut |t| match t {
            Term::Literal(l) if is_year(l) => match question_years.next() {
                Some(y) => Term::Literal(with_lexical(l, &y)),
                None => t.clone(),
            },
            other => other.clone(),
        });
        Ok(TranslationResult {
            logical_form: serialize(&form),
            alternatives: Vec::new(),
            backend: Backend::Baseline,
            used_fallback,
        })
    }
}
