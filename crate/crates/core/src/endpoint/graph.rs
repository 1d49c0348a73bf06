use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EndpointError;

pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

/// An RDF term as it appears in a graph or a result row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Iri(String),
    Literal {
        value: String,
        datatype: Option<String>,
    },
}

impl Node {
    pub fn iri(s: impl Into<String>) -> Self {
        Node::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Node::Literal {
            value: s.into(),
            datatype: None,
        }
    }

    pub fn integer(n: u64) -> Self {
        Node::Literal {
            value: n.to_string(),
            datatype: Some(XSD_INTEGER.to_string()),
        }
    }

    /// The IRI or lexical value, which is what answer sets compare.
    pub fn value(&self) -> &str {
        match self {
            Node::Iri(s) => s,
            Node::Literal { value, .. } => value,
        }
    }

    pub fn as_integer(&self) -> Option<i128> {
        match self {
            Node::Literal { value, .. } => value.parse().ok(),
            Node::Iri(_) => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Iri(s) => write!(f, "<{s}>"),
            Node::Literal { value, datatype } => {
                write!(f, "\"")?;
                for c in value.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                write!(f, "\"")?;
                if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Node,
}

/// A set of triples with a predicate index for the evaluator.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    by_predicate: HashMap<String, Vec<Triple>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.triples.contains(&triple) {
            return false;
        }
        self.by_predicate
            .entry(triple.predicate.clone())
            .or_default()
            .push(triple.clone());
        self.triples.insert(triple)
    }

    pub fn add(&mut self, subject: &str, predicate: &str, object: Node) -> bool {
        self.insert(Triple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object,
        })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn with_predicate(&self, predicate: &str) -> &[Triple] {
        self.by_predicate.get(predicate).map_or(&[], Vec::as_slice)
    }

    /// Every distinct subject or object in the graph.
    pub fn nodes(&self) -> BTreeSet<Node> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            out.insert(Node::Iri(t.subject.clone()));
            out.insert(t.object.clone());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EndpointError> {
        let mut graph = Graph::new();
        for (n, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let triple = parse_line(trimmed).map_err(|reason| EndpointError::GraphParse {
                line: n + 1,
                reason,
            })?;
            graph.insert(triple);
        }
        Ok(graph)
    }

    pub fn load(path: &Path) -> Result<Self, EndpointError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EndpointError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&format!("<{}> <{}> {} .\n", t.subject, t.predicate, t.object));
        }
        out
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        for t in iter {
            g.insert(t);
        }
        g
    }
}

fn take_iri(s: &str) -> Result<(String, &str), String> {
    let s = s.trim_start();
    let rest = s
        .strip_prefix('<')
        .ok_or_else(|| format!("expected `<` at `{}`", truncate(s)))?;
    let end = rest.find('>').ok_or("unterminated IRI")?;
    let iri = &rest[..end];
    if iri.is_empty() || iri.chars().any(char::is_whitespace) {
        return Err(format!("invalid IRI <{iri}>"));
    }
    Ok((iri.to_string(), &rest[end + 1..]))
}

fn take_literal(s: &str) -> Result<(Node, &str), String> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    chars.next(); // opening quote
    let mut value = String::new();
    let mut close = None;
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, 'n')) => value.push('\n'),
                Some((_, 't')) => value.push('\t'),
                Some((_, e @ ('"' | '\\'))) => value.push(e),
                other => return Err(format!("bad escape {:?}", other.map(|p| p.1))),
            },
            '"' => {
                close = Some(i);
                break;
            }
            c => value.push(c),
        }
    }
    let close = close.ok_or("unterminated literal")?;
    let mut rest = &s[close + 1..];
    let mut datatype = None;
    if let Some(r) = rest.strip_prefix("^^") {
        let (dt, r) = take_iri(r)?;
        datatype = Some(dt);
        rest = r;
    } else if rest.starts_with('@') {
        return Err("language tags are not supported".into());
    }
    Ok((Node::Literal { value, datatype }, rest))
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(20) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn parse_line(line: &str) -> Result<Triple, String> {
    let (subject, rest) = take_iri(line)?;
    let (predicate, rest) = take_iri(rest)?;
    let rest = rest.trim_start();
    let (object, rest) = if rest.starts_with('"') {
        take_literal(rest)?
    } else {
        let (iri, rest) = take_iri(rest)?;
        (Node::Iri(iri), rest)
    };
    if rest.trim() != "." {
        return Err(format!("expected `.` at end of line, found `{}`", truncate(rest.trim())));
    }
    Ok(Triple {
        subject,
        predicate,
        object,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_lines() {
        let g = Graph::parse(
            "<http://a> <http://p> <http://b> .\n\
             <http://a> <http://q> \"x y\" .\n\
             # comment\n\
             <http://b> <http://y> \"2020\"^^<http://www.w3.org/2001/XMLSchema#gYear> .\n",
        )
        .unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.with_predicate("http://p").len(), 1);
    }

    #[test]
    fn duplicates_collapse() {
        let g = Graph::parse("<http://a> <http://p> <http://b> .\n<http://a> <http://p> <http://b> .\n").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.with_predicate("http://p").len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Graph::parse("<http://a> <http://p> <http://b> .\n<http://a> <http://p> \n").unwrap_err();
        assert!(matches!(err, EndpointError::GraphParse { line: 2, .. }), "{err:?}");
        let err = Graph::parse("<http://a> <http://p> \"x\"").unwrap_err();
        assert!(matches!(err, EndpointError::GraphParse { line: 1, .. }));
    }

    #[test]
    fn ntriples_round_trip() {
        let text = "<http://a> <http://q> \"say \\\"hi\\\"\" .\n<http://a> <http://p> <http://b> .\n";
        let g = Graph::parse(text).unwrap();
        assert_eq!(Graph::parse(&g.to_ntriples()).unwrap(), g);
    }
}
