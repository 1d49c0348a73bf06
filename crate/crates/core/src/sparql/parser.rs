//! Recursive-descent parser for the supported subset.

use super::ast::*;
use super::token::{placeholder_index, tokenize, SparqlToken, TokenKind};
use super::SparqlError;

pub fn parse(text: &str) -> Result<Query, SparqlError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_offset: text.chars().count(),
    };
    let query = parser.query()?;
    if let Some(tok) = parser.peek() {
        return Err(parser.syntax(tok, &["end of input"]));
    }
    check_scoping(&query)?;
    Ok(query)
}

struct Parser {
    tokens: Vec<SparqlToken>,
    pos: usize,
    end_offset: usize,
}

fn describe(tok: Option<&SparqlToken>) -> String {
    tok.map_or_else(|| "end of input".to_string(), |t| t.text.clone())
}

impl Parser {
    fn peek(&self) -> Option<&SparqlToken> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == kind && t.text == text)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end_offset, |t| t.position)
    }

    fn syntax(&self, tok: &SparqlToken, expected: &[&str]) -> SparqlError {
        SparqlError::Syntax {
            found: tok.text.clone(),
            offset: tok.position,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error_here(&self, expected: &[&str]) -> SparqlError {
        match self.peek() {
            // Bare words are the usual sign of a construct outside the subset.
            Some(t) if t.kind == TokenKind::Name => self.unsupported_name(t),
            Some(t) => self.syntax(t, expected),
            None => SparqlError::Syntax {
                found: describe(None),
                offset: self.end_offset,
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn unsupported_name(&self, tok: &SparqlToken) -> SparqlError {
        let construct = if tok.text == "a" {
            "`a` (rdf:type shorthand)".to_string()
        } else if tok.text.contains(':') {
            format!("prefixed name {}", tok.text)
        } else {
            tok.text.to_ascii_uppercase()
        };
        SparqlError::UnsupportedConstruct {
            construct,
            offset: tok.position,
        }
    }

    fn unsupported(&self, construct: &str, offset: usize) -> SparqlError {
        SparqlError::UnsupportedConstruct {
            construct: construct.to_string(),
            offset,
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<(), SparqlError> {
        if self.peek_is(kind, text) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(&[text]))
        }
    }

    fn eat(&mut self, kind: TokenKind, text: &str) -> bool {
        if self.peek_is(kind, text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn variable(&mut self) -> Result<Variable, SparqlError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Variable => {
                let v = Variable::new(&t.text[1..]);
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error_here(&["variable"])),
        }
    }

    fn integer(&mut self) -> Result<u64, SparqlError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::NumericLiteral && !t.text.contains('.') => {
                let n = t.text.parse().map_err(|_| self.syntax(t, &["integer"]))?;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error_here(&["integer"])),
        }
    }

    fn query(&mut self) -> Result<Query, SparqlError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && t.text == "SELECT" => {
                self.pos += 1;
                self.select()
            }
            Some(t) if t.kind == TokenKind::Keyword && t.text == "ASK" => {
                self.pos += 1;
                self.eat(TokenKind::Keyword, "WHERE");
                let pattern = self.group()?;
                let mut q = Query::ask(pattern);
                self.modifiers(&mut q)?;
                if q.order_by.is_some() || !q.group_by.is_empty() {
                    return Err(self.unsupported("solution modifiers on ASK", self.offset()));
                }
                Ok(q)
            }
            Some(t) if t.kind == TokenKind::Name => {
                let construct = t.text.to_ascii_uppercase();
                if matches!(construct.as_str(), "CONSTRUCT" | "DESCRIBE" | "PREFIX" | "BASE") {
                    Err(self.unsupported(&construct, t.position))
                } else {
                    Err(self.error_here(&["SELECT", "ASK"]))
                }
            }
            _ => Err(self.error_here(&["SELECT", "ASK"])),
        }
    }

    fn select(&mut self) -> Result<Query, SparqlError> {
        let distinct = self.eat(TokenKind::Keyword, "DISTINCT");
        let mut projection = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Variable => {
                    projection.push(Projection::Variable(self.variable()?));
                }
                Some(t) if t.kind == TokenKind::Keyword && t.text == "COUNT" => {
                    projection.push(self.count()?);
                }
                Some(t) if t.kind == TokenKind::Punct && t.text == "(" => {
                    self.pos += 1;
                    if !self.peek_is(TokenKind::Keyword, "COUNT") {
                        return Err(self.unsupported("projection expression", self.offset()));
                    }
                    projection.push(self.count()?);
                    self.expect(TokenKind::Punct, ")")?;
                }
                Some(t) if t.kind == TokenKind::Punct && t.text == "*" => {
                    return Err(self.unsupported("SELECT *", t.position));
                }
                _ => break,
            }
        }
        if projection.is_empty() {
            return Err(self.error_here(&["variable", "COUNT"]));
        }
        self.expect(TokenKind::Keyword, "WHERE")?;
        let pattern = self.group()?;
        let mut q = Query::select(projection, pattern);
        q.distinct = distinct;
        self.modifiers(&mut q)?;
        Ok(q)
    }

    fn count(&mut self) -> Result<Projection, SparqlError> {
        self.expect(TokenKind::Keyword, "COUNT")?;
        self.expect(TokenKind::Punct, "(")?;
        let distinct = self.eat(TokenKind::Keyword, "DISTINCT");
        if self.peek_is(TokenKind::Punct, "*") {
            return Err(self.unsupported("COUNT(*)", self.offset()));
        }
        let inner = self.variable()?;
        self.expect(TokenKind::Punct, ")")?;
        self.expect(TokenKind::Keyword, "AS")?;
        let alias = self.variable()?;
        Ok(Projection::Count {
            distinct,
            inner,
            alias,
        })
    }

    fn modifiers(&mut self, q: &mut Query) -> Result<(), SparqlError> {
        if self.eat(TokenKind::Keyword, "GROUP BY") {
            q.group_by.push(self.variable()?);
            while self.peek().is_some_and(|t| t.kind == TokenKind::Variable) {
                q.group_by.push(self.variable()?);
            }
        }
        if self.peek().is_some_and(|t| t.kind == TokenKind::Name && t.text.eq_ignore_ascii_case("HAVING")) {
            return Err(self.unsupported("HAVING", self.offset()));
        }
        if self.eat(TokenKind::Keyword, "ORDER BY") {
            let direction = if self.eat(TokenKind::Keyword, "ASC") {
                Some(Direction::Asc)
            } else if self.eat(TokenKind::Keyword, "DESC") {
                Some(Direction::Desc)
            } else {
                None
            };
            let variable = match direction {
                Some(_) => {
                    self.expect(TokenKind::Punct, "(")?;
                    let v = self.variable()?;
                    self.expect(TokenKind::Punct, ")")?;
                    v
                }
                None => self.variable()?,
            };
            q.order_by = Some(OrderBy {
                variable,
                direction: direction.unwrap_or(Direction::Asc),
            });
            if self.peek().is_some_and(|t| {
                t.kind == TokenKind::Variable
                    || (t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "ASC" | "DESC"))
            }) {
                return Err(self.unsupported("multiple ORDER BY keys", self.offset()));
            }
        }
        // LIMIT and OFFSET may come in either order.
        for _ in 0..2 {
            if q.limit.is_none() && self.eat(TokenKind::Keyword, "LIMIT") {
                q.limit = Some(self.integer()?);
            } else if q.offset.is_none() && self.eat(TokenKind::Keyword, "OFFSET") {
                q.offset = Some(self.integer()?);
            }
        }
        Ok(())
    }

    fn group(&mut self) -> Result<GroupPattern, SparqlError> {
        self.expect(TokenKind::Punct, "{")?;
        let mut elements = Vec::new();
        loop {
            let Some(tok) = self.peek().cloned() else {
                return Err(self.error_here(&["}"]));
            };
            match (tok.kind, tok.text.as_str()) {
                (TokenKind::Punct, "}") => {
                    self.pos += 1;
                    break;
                }
                (TokenKind::Punct, "{") => {
                    let mut left = self.group()?;
                    if !self.peek_is(TokenKind::Keyword, "UNION") {
                        return Err(self.unsupported("nested group without UNION", tok.position));
                    }
                    while self.eat(TokenKind::Keyword, "UNION") {
                        let right = self.group()?;
                        left = match self.peek_is(TokenKind::Keyword, "UNION") {
                            // Left-associative chains nest the finished pair in a group.
                            true => GroupPattern::new(vec![PatternElement::Union(left, right)]),
                            false => {
                                elements.push(PatternElement::Union(left, right));
                                break;
                            }
                        };
                    }
                    self.eat(TokenKind::Punct, ".");
                }
                (TokenKind::Keyword, "FILTER") => {
                    self.pos += 1;
                    elements.push(PatternElement::Filter(self.filter()?));
                    self.eat(TokenKind::Punct, ".");
                }
                (TokenKind::Keyword, "BIND") => {
                    self.pos += 1;
                    self.expect(TokenKind::Punct, "(")?;
                    let value = self.term()?;
                    if matches!(value, Term::Variable(_)) {
                        return Err(self.unsupported("BIND of a variable", tok.position));
                    }
                    self.expect(TokenKind::Keyword, "AS")?;
                    let target = self.variable()?;
                    self.expect(TokenKind::Punct, ")")?;
                    elements.push(PatternElement::Bind { value, target });
                    self.eat(TokenKind::Punct, ".");
                }
                (TokenKind::Name, _) => return Err(self.unsupported_name(&tok)),
                _ => {
                    elements.push(PatternElement::Triple(self.triple()?));
                    match self.peek() {
                        Some(t) if t.kind == TokenKind::Punct && t.text == "." => self.pos += 1,
                        Some(t) if t.kind == TokenKind::Punct && matches!(t.text.as_str(), "}" | "{") => {}
                        Some(t) if t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "FILTER" | "BIND") => {}
                        Some(t) if t.kind == TokenKind::Punct && matches!(t.text.as_str(), ";" | ",") => {
                            return Err(self.unsupported("predicate-object list", t.position));
                        }
                        _ => return Err(self.error_here(&[".", "}"])),
                    }
                }
            }
        }
        Ok(GroupPattern::new(elements))
    }

    fn filter(&mut self) -> Result<Filter, SparqlError> {
        if self.eat(TokenKind::Keyword, "NOT EXISTS") {
            return Ok(Filter::NotExists(self.group()?));
        }
        self.expect(TokenKind::Punct, "(")?;
        let left = self.term()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Punct => match CompareOp::from_symbol(&t.text) {
                Some(op) => op,
                None if matches!(t.text.as_str(), "&&" | "||" | "!" | "+" | "-" | "*" | "/") => {
                    return Err(self.unsupported(&format!("operator {}", t.text), t.position));
                }
                None => return Err(self.error_here(&["comparison operator"])),
            },
            _ => return Err(self.error_here(&["comparison operator"])),
        };
        self.pos += 1;
        let right = self.term()?;
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Punct && matches!(t.text.as_str(), "&&" | "||") {
                return Err(self.unsupported(&format!("operator {}", t.text), t.position));
            }
        }
        self.expect(TokenKind::Punct, ")")?;
        Ok(Filter::Compare { left, op, right })
    }

    fn triple(&mut self) -> Result<TriplePattern, SparqlError> {
        let subject = self.term()?;
        let predicate = match self.peek() {
            Some(t) if t.kind == TokenKind::Iri => {
                let iri = Iri::new(&t.text[1..t.text.len() - 1]);
                self.pos += 1;
                iri
            }
            Some(t) if t.kind == TokenKind::Variable => {
                return Err(self.unsupported("variable predicate", t.position));
            }
            _ => return Err(self.error_here(&["IRI"])),
        };
        let object = self.term()?;
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    fn term(&mut self) -> Result<Term, SparqlError> {
        const EXPECTED: &[&str] = &["variable", "IRI", "mention", "placeholder", "literal"];
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_here(EXPECTED));
        };
        let inner = || tok.text[1..tok.text.len() - 1].to_string();
        let term = match tok.kind {
            TokenKind::Variable => Term::Variable(Variable::new(&tok.text[1..])),
            TokenKind::Iri => Term::Iri(Iri::new(inner())),
            TokenKind::Mention => Term::Mention(inner()),
            TokenKind::Placeholder => {
                // The lexer only emits placeholders whose index parses.
                Term::Placeholder(placeholder_index(&inner()).expect("lexer-validated placeholder"))
            }
            TokenKind::NumericLiteral => Term::Literal(Literal::Numeric(tok.text.clone())),
            TokenKind::StringLiteral => Term::Literal(decode_string_literal(&tok)?),
            _ => return Err(self.error_here(EXPECTED)),
        };
        self.pos += 1;
        Ok(term)
    }
}

fn decode_string_literal(tok: &SparqlToken) -> Result<Literal, SparqlError> {
    let mut chars = tok.text.chars();
    let quote = chars.next().expect("non-empty literal token");
    let mut value = String::new();
    let mut rest = String::new();
    let mut closed = false;
    while let Some(c) = chars.next() {
        if closed {
            rest.push(c);
            continue;
        }
        match c {
            '\\' => match chars.next() {
                Some('n') => value.push('\n'),
                Some('t') => value.push('\t'),
                Some('r') => value.push('\r'),
                Some(e @ ('"' | '\'' | '\\')) => value.push(e),
                other => {
                    return Err(SparqlError::UnsupportedConstruct {
                        construct: format!("escape sequence \\{}", other.unwrap_or(' ')),
                        offset: tok.position,
                    })
                }
            },
            c if c == quote => closed = true,
            c => value.push(c),
        }
    }
    let datatype = if rest.is_empty() {
        None
    } else if let Some(dt) = rest.strip_prefix("^^<").and_then(|r| r.strip_suffix('>')) {
        Some(dt.to_string())
    } else {
        return Err(SparqlError::UnsupportedConstruct {
            construct: "language-tagged literal".into(),
            offset: tok.position,
        });
    };
    Ok(Literal::String { value, datatype })
}

/// Projected and modifier variables must be bound by the pattern (or be an
/// aggregate alias).
fn check_scoping(q: &Query) -> Result<(), SparqlError> {
    let bound = q.pattern_variables();
    let mut aliases = Vec::new();
    let unbound = |v: &Variable| SparqlError::UnboundVariable {
        variable: v.to_string(),
    };
    for p in &q.projection {
        match p {
            Projection::Variable(v) if !bound.contains(v) => return Err(unbound(v)),
            Projection::Count { inner, alias, .. } => {
                if !bound.contains(inner) {
                    return Err(unbound(inner));
                }
                aliases.push(alias);
            }
            _ => {}
        }
    }
    for v in &q.group_by {
        if !bound.contains(v) {
            return Err(unbound(v));
        }
    }
    if let Some(o) = &q.order_by {
        if !bound.contains(&o.variable) && !aliases.contains(&&o.variable) {
            return Err(unbound(&o.variable));
        }
    }
    Ok(())
}
