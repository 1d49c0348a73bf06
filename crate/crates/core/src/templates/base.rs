use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sparql::{parse, serialize, Query, SparqlError, Term, Vocabulary};

use super::delex::{delexicalize, max_placeholder};
use super::similarity::similarity;
use super::TemplateError;

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub canonical_text: String,
    pub placeholder_count: usize,
    pub frequency: u32,
    pub source_ids: Vec<String>,
    query: Query,
}

impl Template {
    pub fn query(&self) -> &Query {
        &self.query
    }
}

/// One line of the persisted base.
#[derive(Debug, Serialize, Deserialize)]
struct TemplateRecord {
    template: String,
    frequency: u32,
    source_ids: Vec<String>,
}

/// A training query that could not be turned into a template.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedQuery {
    pub id: String,
    pub error: SparqlError,
}

#[derive(Debug, Clone, Default)]
pub struct TemplateBase {
    /// Sorted by canonical text.
    templates: Vec<Template>,
    by_text: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredTemplate<'a> {
    pub template: &'a Template,
    pub score: f64,
}

/// Checks the stored-template invariants: dense placeholders and no mentions
/// or entity IRIs.
fn validate_template(query: &Query, vocab: Option<&Vocabulary>) -> Result<usize, String> {
    let mut seen = Vec::new();
    let mut problem = None;
    query.for_each_term(&mut |t| match t {
        Term::Placeholder(k) => {
            if !seen.contains(k) {
                seen.push(*k);
            }
        }
        Term::Mention(m) => problem = Some(format!("mention <{m}> in template")),
        Term::Iri(iri) if vocab.is_some_and(|v| v.is_entity_iri(iri.as_str())) => {
            problem = Some(format!("entity IRI {iri} in template"))
        }
        _ => {}
    });
    if let Some(p) = problem {
        return Err(p);
    }
    // First appearances must read 1, 2, 3, ...
    for (i, k) in seen.iter().enumerate() {
        if *k as usize != i + 1 {
            return Err(format!("placeholders not numbered densely by first appearance: {seen:?}"));
        }
    }
    Ok(seen.len())
}

impl TemplateBase {
    pub fn build<I, S, T>(training: I, vocab: &Vocabulary) -> (Self, Vec<SkippedQuery>)
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut order: Vec<Template> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut skipped = Vec::new();
        for (id, text) in training {
            let id = id.into();
            let query = match parse(text.as_ref()) {
                Ok(q) => q,
                Err(error) => {
                    skipped.push(SkippedQuery { id, error });
                    continue;
                }
            };
            let (template, bindings) = delexicalize(&query, vocab);
            let canonical_text = serialize(&template);
            match index.get(&canonical_text) {
                Some(&i) => {
                    order[i].frequency += 1;
                    order[i].source_ids.push(id);
                }
                None => {
                    index.insert(canonical_text.clone(), order.len());
                    order.push(Template {
                        canonical_text,
                        placeholder_count: bindings.len(),
                        frequency: 1,
                        source_ids: vec![id],
                        query: template,
                    });
                }
            }
        }
        (Self::from_templates(order), skipped)
    }

    fn from_templates(mut templates: Vec<Template>) -> Self {
        templates.sort_by(|a, b| a.canonical_text.cmp(&b.canonical_text));
        let by_text = templates
            .iter()
            .enumerate()
            .map(|(i, t)| (t.canonical_text.clone(), i))
            .collect();
        Self { templates, by_text }
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn get(&self, canonical_text: &str) -> Option<&Template> {
        self.by_text.get(canonical_text).map(|&i| &self.templates[i])
    }

    pub fn total_frequency(&self) -> u64 {
        self.templates.iter().map(|t| t.frequency as u64).sum()
    }

    /// The `k` most similar templates to `probe`, by descending similarity,
    /// then descending frequency, then ascending canonical text.
    pub fn top_k(&self, probe: &str, k: usize) -> Result<Vec<ScoredTemplate<'_>>, TemplateError> {
        if self.templates.is_empty() {
            return Err(TemplateError::EmptyBase);
        }
        if k == 0 {
            return Err(TemplateError::InvalidK);
        }
        let mut scored: Vec<ScoredTemplate<'_>> = self
            .templates
            .iter()
            .map(|t| ScoredTemplate {
                template: t,
                score: similarity(probe, &t.canonical_text),
            })
            .collect();
        scored.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(b.template.frequency.cmp(&a.template.frequency))
                .then_with(|| a.template.canonical_text.cmp(&b.template.canonical_text))
        });
        scored.truncate(k);
        Ok(scored)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.templates {
            let record = TemplateRecord {
                template: t.canonical_text.clone(),
                frequency: t.frequency,
                source_ids: t.source_ids.clone(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let file = std::fs::File::create(&tmp)?;
            self.write_to(std::io::BufWriter::new(file))?;
        }
        std::fs::rename(tmp, path)
    }

    /// Reads a persisted base. With a vocabulary, entity IRIs inside a
    /// template are rejected as well.
    pub fn read_from<R: BufRead>(input: R, vocab: Option<&Vocabulary>) -> Result<Self, TemplateError> {
        let mut templates = Vec::new();
        let mut seen = HashMap::new();
        for (n, line) in input.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| TemplateError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| TemplateError::BadRecord { line: line_no, reason };
            let record: TemplateRecord =
                serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let query = parse(&record.template).map_err(|e| bad(e.to_string()))?;
            let placeholder_count = validate_template(&query, vocab).map_err(bad)?;
            debug_assert_eq!(placeholder_count, max_placeholder(&query));
            let canonical_text = serialize(&query);
            if canonical_text != record.template {
                return Err(bad("template text is not in canonical form".into()));
            }
            if record.frequency == 0 {
                return Err(bad("frequency must be at least 1".into()));
            }
            if seen.insert(canonical_text.clone(), line_no).is_some() {
                return Err(bad("duplicate template".into()));
            }
            templates.push(Template {
                canonical_text,
                placeholder_count,
                frequency: record.frequency,
                source_ids: record.source_ids,
                query,
            });
        }
        Ok(Self::from_templates(templates))
    }

    pub fn load(path: &Path, vocab: Option<&Vocabulary>) -> Result<Self, TemplateError> {
        let file = std::fs::File::open(path).map_err(|e| TemplateError::Io(format!("{}: {e}", path.display())))?;
        Self::read_from(std::io::BufReader::new(file), vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AUTH: &str = "https://dblp.org/rdf/schema#authoredBy";

    fn q(object: &str) -> String {
        format!("SELECT ?x WHERE {{ ?x <{AUTH}> <{object}> . }}")
    }

    #[test]
    fn entity_variants_collapse() {
        let vocab = Vocabulary::dblp_default();
        let (base, skipped) = TemplateBase::build(
            [("a", q("https://dblp.org/pid/1")), ("b", q("https://dblp.org/pid/2"))],
            &vocab,
        );
        assert!(skipped.is_empty());
        assert_eq!(base.len(), 1);
        let t = &base.templates()[0];
        assert_eq!(t.frequency, 2);
        assert_eq!(t.source_ids, vec!["a", "b"]);
        assert_eq!(t.placeholder_count, 1);
        assert_eq!(base.total_frequency(), 2);
    }

    #[test]
    fn empty_input_and_parse_failures() {
        let vocab = Vocabulary::dblp_default();
        let (base, skipped) = TemplateBase::build(Vec::<(String, String)>::new(), &vocab);
        assert!(base.is_empty());
        assert!(skipped.is_empty());
        assert_eq!(base.top_k("x", 3).unwrap_err(), TemplateError::EmptyBase);

        let (base, skipped) =
            TemplateBase::build([("ok", q("https://dblp.org/pid/1")), ("bad", "SELECT ?x WHERE { ?x }".into())], &vocab);
        assert_eq!(base.len(), 1);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].id, "bad");
    }

    #[test]
    fn retrieval_order_and_ties() {
        let vocab = Vocabulary::dblp_default();
        let training = [
            ("1", format!("SELECT ?x WHERE {{ ?x <{AUTH}> <https://dblp.org/pid/1> . }}")),
            ("2", format!("ASK {{ ?x <{AUTH}> <https://dblp.org/pid/1> . }}")),
            ("3", format!("ASK {{ ?x <{AUTH}> <https://dblp.org/pid/2> . }}")),
        ];
        let (base, _) = TemplateBase::build(training, &vocab);
        let exact = format!("SELECT ?x WHERE {{ ?x <{AUTH}> <entity_1> . }}");
        let top = base.top_k(&exact, 3).unwrap();
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].template.canonical_text, exact);
        assert_eq!(top[0].score, 1.0);

        // A probe equidistant from both: frequency breaks the tie.
        let (base, _) = TemplateBase::build(
            [
                ("a", "ASK { ?x <http://p/a> ?y . }".to_string()),
                ("b", "ASK { ?x <http://p/b> ?y . }".to_string()),
                ("b2", "ASK { ?x <http://p/b> ?y . }".to_string()),
                ("c", "ASK { ?x <http://p/c> ?y . }".to_string()),
            ],
            &vocab,
        );
        let top = base.top_k("ASK { ?x <http://p/z> ?y . }", 3).unwrap();
        let texts: Vec<_> = top.iter().map(|s| s.template.canonical_text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "ASK { ?x <http://p/b> ?y . }",
                "ASK { ?x <http://p/a> ?y . }",
                "ASK { ?x <http://p/c> ?y . }"
            ]
        );
        assert_eq!(base.top_k("x", 0).unwrap_err(), TemplateError::InvalidK);
    }

    #[test]
    fn persistence_round_trip_is_sorted_and_stable() {
        let vocab = Vocabulary::dblp_default();
        let (base, _) = TemplateBase::build(
            [
                ("z", format!("SELECT ?x WHERE {{ ?x <{AUTH}> <https://dblp.org/pid/1> . }}")),
                ("y", format!("ASK {{ ?x <{AUTH}> <https://dblp.org/pid/1> . }}")),
            ],
            &vocab,
        );
        let mut bytes = Vec::new();
        base.write_to(&mut bytes).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("{\"template\":\"ASK"));
        let back = TemplateBase::read_from(bytes.as_slice(), Some(&vocab)).unwrap();
        assert_eq!(back.templates(), base.templates());
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn rejects_invalid_records() {
        let vocab = Vocabulary::dblp_default();
        for line in [
            r#"{"template":"ASK { ?x <http://p> <entity_2> . }","frequency":1,"source_ids":[]}"#,
            r#"{"template":"ASK { ?x <http://p> <Some Mention> . }","frequency":1,"source_ids":[]}"#,
            r#"{"template":"ASK { ?x <http://p> <https://dblp.org/pid/1> . }","frequency":1,"source_ids":[]}"#,
            r#"{"template":"ASK  { ?x <http://p> ?y . }","frequency":1,"source_ids":[]}"#,
            r#"{"template":"ASK { ?x <http://p> ?y . }","frequency":0,"source_ids":[]}"#,
            r#"not json"#,
        ] {
            assert!(
                matches!(
                    TemplateBase::read_from(line.as_bytes(), Some(&vocab)),
                    Err(TemplateError::BadRecord { line: 1, .. })
                ),
                "{line}"
            );
        }
    }
}
