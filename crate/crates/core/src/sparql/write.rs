//! Canonical serialization.
//!
//! The AST is flattened back into tokens and joined with the same
//! whitespace rule the lexer's [`normalize`](super::token::normalize) uses,
//! so `serialize(parse(s)) == normalize(s)` for already-canonical input.

use super::ast::*;
use super::token::{join_tokens, TokenKind};

/// Canonical text of a query. Aggregates are written as
/// `COUNT(DISTINCT ?x) AS ?c`, the form logical forms and templates use.
pub fn serialize(q: &Query) -> String {
    render(q, false)
}

/// Standard SPARQL 1.1 text: identical to [`serialize`] except that
/// aggregate projections are parenthesised, as endpoints require.
pub fn serialize_standard(q: &Query) -> String {
    render(q, true)
}

fn render(q: &Query, standard: bool) -> String {
    let mut w = TokenWriter::default();
    w.query(q, standard);
    join_tokens(w.tokens.iter().map(|(k, t)| (*k, t.as_str())))
}

#[derive(Default)]
struct TokenWriter {
    tokens: Vec<(TokenKind, String)>,
}

impl TokenWriter {
    fn kw(&mut self, s: &str) {
        self.tokens.push((TokenKind::Keyword, s.to_string()));
    }

    fn punct(&mut self, s: &str) {
        self.tokens.push((TokenKind::Punct, s.to_string()));
    }

    fn var(&mut self, v: &Variable) {
        self.tokens.push((TokenKind::Variable, v.to_string()));
    }

    fn query(&mut self, q: &Query, standard: bool) {
        match q.form {
            QueryForm::Ask => self.kw("ASK"),
            QueryForm::Select => {
                self.kw("SELECT");
                if q.distinct {
                    self.kw("DISTINCT");
                }
                for p in &q.projection {
                    match p {
                        Projection::Variable(v) => self.var(v),
                        Projection::Count {
                            distinct,
                            inner,
                            alias,
                        } => {
                            if standard {
                                self.punct("(");
                            }
                            self.kw("COUNT");
                            self.punct("(");
                            if *distinct {
                                self.kw("DISTINCT");
                            }
                            self.var(inner);
                            self.punct(")");
                            self.kw("AS");
                            self.var(alias);
                            if standard {
                                self.punct(")");
                            }
                        }
                    }
                }
                self.kw("WHERE");
            }
        }
        self.group(&q.pattern);
        if !q.group_by.is_empty() {
            self.kw("GROUP BY");
            for v in &q.group_by {
                self.var(v);
            }
        }
        if let Some(o) = &q.order_by {
            self.kw("ORDER BY");
            self.kw(match o.direction {
                Direction::Asc => "ASC",
                Direction::Desc => "DESC",
            });
            self.punct("(");
            self.var(&o.variable);
            self.punct(")");
        }
        if let Some(n) = q.limit {
            self.kw("LIMIT");
            self.tokens.push((TokenKind::NumericLiteral, n.to_string()));
        }
        if let Some(n) = q.offset {
            self.kw("OFFSET");
            self.tokens.push((TokenKind::NumericLiteral, n.to_string()));
        }
    }

    fn group(&mut self, g: &GroupPattern) {
        self.punct("{");
        for element in &g.elements {
            match element {
                PatternElement::Triple(t) => {
                    self.term(&t.subject);
                    self.tokens.push((TokenKind::Iri, t.predicate.to_string()));
                    self.term(&t.object);
                    self.punct(".");
                }
                PatternElement::Filter(Filter::Compare { left, op, right }) => {
                    self.kw("FILTER");
                    self.punct("(");
                    self.term(left);
                    self.punct(op.symbol());
                    self.term(right);
                    self.punct(")");
                }
                PatternElement::Filter(Filter::NotExists(inner)) => {
                    self.kw("FILTER");
                    self.kw("NOT EXISTS");
                    self.group(inner);
                }
                PatternElement::Union(a, b) => {
                    self.group(a);
                    self.kw("UNION");
                    self.group(b);
                }
                PatternElement::Bind { value, target } => {
                    self.kw("BIND");
                    self.punct("(");
                    self.term(value);
                    self.kw("AS");
                    self.var(target);
                    self.punct(")");
                }
            }
        }
        self.punct("}");
    }

    fn term(&mut self, t: &Term) {
        let tok = match t {
            Term::Variable(v) => (TokenKind::Variable, v.to_string()),
            Term::Iri(i) => (TokenKind::Iri, i.to_string()),
            Term::Mention(m) => (TokenKind::Mention, format!("<{m}>")),
            Term::Placeholder(k) => (TokenKind::Placeholder, format!("<entity_{k}>")),
            Term::Literal(Literal::Numeric(n)) => (TokenKind::NumericLiteral, n.clone()),
            Term::Literal(Literal::String { value, datatype }) => {
                let mut s = String::with_capacity(value.len() + 2);
                s.push('"');
                for c in value.chars() {
                    match c {
                        '"' => s.push_str("\\\""),
                        '\\' => s.push_str("\\\\"),
                        '\n' => s.push_str("\\n"),
                        '\t' => s.push_str("\\t"),
                        '\r' => s.push_str("\\r"),
                        c => s.push(c),
                    }
                }
                s.push('"');
                if let Some(dt) = datatype {
                    s.push_str("^^<");
                    s.push_str(dt);
                    s.push('>');
                }
                (TokenKind::StringLiteral, s)
            }
        };
        self.tokens.push(tok);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::{normalize, parse};

    const STEP_ONE_FORM: &str = "SELECT COUNT(DISTINCT ?answer) AS ?count
WHERE {
   ?answer <https://dblp.org/rdf/schema#authoredBy> <Ruijie Wang> .
   ?answer <https://dblp.org/rdf/schema#authoredBy> <Luca Rossetto> .
}";

    #[test]
    fn worked_form_reproduces_modulo_whitespace() {
        let text = serialize(&parse(STEP_ONE_FORM).unwrap());
        assert_eq!(text, normalize(STEP_ONE_FORM).unwrap());
        let collapsed: Vec<&str> = STEP_ONE_FORM.split_whitespace().collect();
        assert_eq!(text, collapsed.join(" "));
    }

    #[test]
    fn standard_form_parenthesises_aggregates() {
        let q = parse(STEP_ONE_FORM).unwrap();
        assert!(serialize_standard(&q).starts_with("SELECT (COUNT(DISTINCT ?answer) AS ?count) WHERE {"));
        assert_eq!(parse(&serialize_standard(&q)).unwrap(), q);
    }

    #[test]
    fn canonical_modifiers() {
        let q = parse("select ?x where { ?x <http://p> ?y } order by ?x offset 3 limit 2").unwrap();
        assert_eq!(
            serialize(&q),
            "SELECT ?x WHERE { ?x <http://p> ?y . } ORDER BY ASC(?x) LIMIT 2 OFFSET 3"
        );
    }

    #[test]
    fn idempotent_on_assorted_queries() {
        for s in [
            STEP_ONE_FORM,
            "ASK { ?p <https://dblp.org/rdf/schema#authoredBy> <entity_1> . }",
            "SELECT DISTINCT ?a WHERE { {?a <http://p> <A>} UNION {?a <http://q> \"x\\\"y\"} FILTER(?a != <B>) BIND(3 AS ?n) }",
            "SELECT ?x (COUNT(?y) AS ?c) WHERE { ?x <http://p> ?y FILTER NOT EXISTS { ?x <http://q> 1.5 } } GROUP BY ?x ORDER BY DESC(?c) LIMIT 1",
        ] {
            let once = serialize(&parse(s).unwrap());
            let twice = serialize(&parse(&once).unwrap());
            assert_eq!(once, twice);
        }
    }
}
