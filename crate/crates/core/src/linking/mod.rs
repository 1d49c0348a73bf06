//! Entity linking: mentions in a logical form are resolved to ranked DBLP
//! IRIs through the DBLP search API, a write-through cache, or recorded
//! fixtures.

mod client;

pub use client::{
    fixture_relpath, normalize_surface, parse_response, search_url, write_fixture, LinkMode, Linker,
    LinkerConfig,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparql::{Query, Term};

const SCHEMA: &str = "https://dblp.org/rdf/schema#";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Author,
    Publication,
    Venue,
}

impl EntityType {
    /// Path segment of the search API, also used as the fixture directory.
    pub fn api_segment(self) -> &'static str {
        match self {
            EntityType::Author => "author",
            EntityType::Publication => "publ",
            EntityType::Venue => "venue",
        }
    }

    /// Field of a hit's `info` object holding the display label.
    fn label_field(self) -> &'static str {
        match self {
            EntityType::Author => "author",
            EntityType::Publication => "title",
            EntityType::Venue => "venue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Subject,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MentionContext {
    pub predicate: String,
    pub slot: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mention {
    pub surface: String,
    /// The first triple pattern position where the mention occurs; `None`
    /// when it only appears in a FILTER or BIND.
    pub context: Option<MentionContext>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCandidate {
    pub iri: String,
    pub label: String,
    pub rank: u32,
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("network error: {0}")]
    Network(String),
    #[error("no candidates for {surface:?}")]
    NoCandidates { surface: String },
    #[error("no fixture for {surface:?} (expected {path})")]
    FixtureMissing { surface: String, path: String },
    #[error("malformed search response: {0}")]
    MalformedResponse(String),
    #[error("mention is empty")]
    EmptySurface,
    #[error("invalid linker configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(String),
}

/// One row of the mention classification table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyRule {
    pub predicate: String,
    pub slot: Slot,
    pub entity_type: EntityType,
}

impl ClassifyRule {
    fn new(local: &str, slot: Slot, entity_type: EntityType) -> Self {
        Self {
            predicate: format!("{SCHEMA}{local}"),
            slot,
            entity_type,
        }
    }
}

/// Rules consulted in order; the first match wins.
pub fn default_rules() -> Vec<ClassifyRule> {
    use EntityType::*;
    vec![
        ClassifyRule::new("authoredBy", Slot::Object, Author),
        ClassifyRule::new("authoredBy", Slot::Subject, Publication),
        ClassifyRule::new("title", Slot::Subject, Publication),
        ClassifyRule::new("yearOfPublication", Slot::Subject, Publication),
        ClassifyRule::new("publishedIn", Slot::Object, Venue),
        ClassifyRule::new("publishedIn", Slot::Subject, Publication),
        ClassifyRule::new("numberOfCreators", Slot::Subject, Publication),
        ClassifyRule::new("doi", Slot::Subject, Publication),
        ClassifyRule::new("bibtexType", Slot::Subject, Publication),
    ]
}

/// Entity type for a mention; author when no rule applies.
pub fn classify_mention_type(mention: &Mention, rules: &[ClassifyRule]) -> EntityType {
    mention
        .context
        .as_ref()
        .and_then(|c| {
            rules
                .iter()
                .find(|r| r.predicate == c.predicate && r.slot == c.slot)
        })
        .map_or(EntityType::Author, |r| r.entity_type)
}

/// Distinct mentions in order of first appearance.
pub fn extract_mentions(query: &Query) -> Vec<Mention> {
    let mut surfaces: Vec<String> = Vec::new();
    query.for_each_term(&mut |t| {
        if let Term::Mention(m) = t {
            if !surfaces.contains(m) {
                surfaces.push(m.clone());
            }
        }
    });
    let triples = query.triple_patterns();
    surfaces
        .into_iter()
        .map(|surface| {
            let context = triples.iter().find_map(|t| {
                let slot = match (&t.subject, &t.object) {
                    (Term::Mention(s), _) if *s == surface => Slot::Subject,
                    (_, Term::Mention(o)) if *o == surface => Slot::Object,
                    _ => return None,
                };
                Some(MentionContext {
                    predicate: t.predicate.as_str().to_string(),
                    slot,
                })
            });
            Mention { surface, context }
        })
        .collect()
}
