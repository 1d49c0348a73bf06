//! Relation vocabulary shared by the translator's special tokens and the
//! entity/relation split used during delexicalization.

use std::path::Path;

use super::token::KEYWORDS;
use super::SparqlError;

/// Relations shipped with the crate; one IRI per line, `#` starts a comment.
pub const DEFAULT_RELATIONS: &str = include_str!("../../data/relations.txt");

/// IRI namespaces whose members are schema terms or classes, never entities.
pub const DEFAULT_SCHEMA_PREFIXES: &[&str] = &[
    "https://dblp.org/rdf/schema#",
    "http://www.w3.org/",
    "http://purl.org/net/nknouf/ns/bibtex#",
];

/// Punctuation that the translator treats as atomic.
const SYNTAX_PUNCT: &[&str] = &["{", "}", "(", ")", ".", "=", "!=", "<", "<=", ">", ">="];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    relations: Vec<String>,
    schema_prefixes: Vec<String>,
}

impl Vocabulary {
    pub fn new(relations: Vec<String>, schema_prefixes: Vec<String>) -> Result<Self, SparqlError> {
        if relations.is_empty() {
            return Err(SparqlError::EmptyRelationSet);
        }
        let mut checked = Vec::with_capacity(relations.len());
        for r in relations {
            let iri = validate_iri(&r)?;
            if !checked.contains(&iri) {
                checked.push(iri);
            }
        }
        Ok(Self {
            relations: checked,
            schema_prefixes,
        })
    }

    pub fn parse_relations(text: &str) -> Result<Self, SparqlError> {
        let relations = text
            .lines()
            .map(|l| strip_comment(l).trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Self::new(
            relations,
            DEFAULT_SCHEMA_PREFIXES.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_relations(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    }

    pub fn dblp_default() -> Self {
        Self::parse_relations(DEFAULT_RELATIONS).expect("bundled relations file is valid")
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn is_relation(&self, iri: &str) -> bool {
        self.relations.iter().any(|r| r == iri)
    }

    /// An IRI names an entity unless it is a configured relation or lives in
    /// a schema namespace.
    pub fn is_entity_iri(&self, iri: &str) -> bool {
        !self.is_relation(iri) && !self.schema_prefixes.iter().any(|p| iri.starts_with(p.as_str()))
    }

    pub fn special_tokens(&self) -> Vec<String> {
        special_token_vocabulary(&self.relations).expect("vocabulary holds at least one relation")
    }
}

/// `#` inside an IRI fragment is not a comment; a comment starts at `#`
/// preceded by whitespace or at the beginning of the line.
fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim_start();
    if trimmed.starts_with('#') {
        return "";
    }
    match line.find(" #").or_else(|| line.find("\t#")) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn validate_iri(raw: &str) -> Result<String, SparqlError> {
    let s = raw.trim();
    let s = s
        .strip_prefix('<')
        .and_then(|x| x.strip_suffix('>'))
        .unwrap_or(s);
    let valid = (s.starts_with("http://") || s.starts_with("https://"))
        && s.len() > "https://".len()
        && !s.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"'));
    if valid {
        Ok(s.to_string())
    } else {
        Err(SparqlError::InvalidIri { iri: raw.to_string() })
    }
}

/// The fixed syntax tokens followed by the relation IRIs, deduplicated with
/// first-occurrence order kept. This list is what the neural backend adds to
/// its tokenizer.
pub fn special_token_vocabulary(relations: &[String]) -> Result<Vec<String>, SparqlError> {
    if relations.is_empty() {
        return Err(SparqlError::EmptyRelationSet);
    }
    let mut out: Vec<String> = KEYWORDS
        .iter()
        .chain(SYNTAX_PUNCT.iter())
        .map(|s| s.to_string())
        .collect();
    for r in relations {
        let iri = validate_iri(r)?;
        if !out.contains(&iri) {
            out.push(iri);
        }
    }
    Ok(out)
}
