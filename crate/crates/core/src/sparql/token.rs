//! Lexer for the SPARQL subset and the logical-form dialect.
//!
//! Angle-bracketed terms are split three ways: `<http...>` is an IRI,
//! `<entity_k>` is a template placeholder and anything else is a
//! natural-language mention such as `<Ruijie Wang>`.

use std::fmt;

use super::SparqlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Variable,
    Iri,
    Mention,
    Placeholder,
    StringLiteral,
    NumericLiteral,
    Punct,
    /// A bare word outside the keyword vocabulary (`OPTIONAL`, `dblp:title`, `a`).
    /// Never accepted by the parser; kept so it can name the construct it rejects.
    Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlToken {
    pub kind: TokenKind,
    pub text: String,
    /// Character offset (not byte offset) of the first character.
    pub position: usize,
}

impl fmt::Display for SparqlToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Single-word keywords. `GROUP BY`, `ORDER BY` and `NOT EXISTS` are
/// assembled from two words by the lexer.
const SINGLE_KEYWORDS: &[&str] = &[
    "SELECT", "ASK", "WHERE", "DISTINCT", "COUNT", "AS", "FILTER", "UNION", "ASC", "DESC",
    "LIMIT", "OFFSET", "BIND",
];

const PAIRED_KEYWORDS: &[(&str, &str)] = &[("GROUP", "BY"), ("ORDER", "BY"), ("NOT", "EXISTS")];

/// Every keyword the lexer can emit, in canonical spelling.
pub const KEYWORDS: &[&str] = &[
    "SELECT", "ASK", "WHERE", "DISTINCT", "COUNT", "AS", "FILTER", "UNION", "GROUP BY",
    "ORDER BY", "ASC", "DESC", "LIMIT", "OFFSET", "BIND", "NOT EXISTS",
];

pub fn tokenize(text: &str) -> Result<Vec<SparqlToken>, SparqlError> {
    Lexer::new(text).run()
}

/// Returns `Some(k)` when `inner` (the text between the brackets) is a
/// placeholder name `entity_k` with `k >= 1` and no leading zeros.
pub fn placeholder_index(inner: &str) -> Option<u32> {
    let digits = inner.strip_prefix("entity_")?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    digits.parse().ok()
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    out: Vec<SparqlToken>,
}

impl Lexer {
    fn new(text: &str) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            out: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, text: String, position: usize) {
        self.out.push(SparqlToken {
            kind,
            text,
            position,
        });
    }

    fn run(mut self) -> Result<Vec<SparqlToken>, SparqlError> {
        while let Some(c) = self.peek(0) {
            let start = self.pos;
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '<' {
                self.lex_angle(start)?;
            } else if c == '?' || c == '$' {
                self.lex_variable(start)?;
            } else if c == '"' || c == '\'' {
                self.lex_string(start, c)?;
            } else if c.is_ascii_digit() {
                self.lex_number(start);
            } else if c.is_alphabetic() || c == '_' {
                self.lex_word(start);
            } else {
                self.lex_punct(start, c)?;
            }
        }
        Ok(self.out)
    }

    fn lex_angle(&mut self, start: usize) -> Result<(), SparqlError> {
        // `<` followed by space, `=`, a variable, a paren or a string is a comparison.
        match self.peek(1) {
            None => {
                return Err(SparqlError::UnterminatedBracket { offset: start });
            }
            Some('=') => {
                self.pos += 2;
                self.push(TokenKind::Punct, "<=".into(), start);
                return Ok(());
            }
            Some(n) if n.is_whitespace() || matches!(n, '?' | '$' | '(' | '"' | '\'') => {
                self.pos += 1;
                self.push(TokenKind::Punct, "<".into(), start);
                return Ok(());
            }
            _ => {}
        }
        let mut end = self.pos + 1;
        loop {
            match self.chars.get(end) {
                None | Some('\n') | Some('<') => {
                    return Err(SparqlError::UnterminatedBracket { offset: start });
                }
                Some('>') => break,
                Some(_) => end += 1,
            }
        }
        let inner: String = self.chars[self.pos + 1..end].iter().collect();
        self.pos = end + 1;
        if inner.trim().is_empty() {
            return Err(SparqlError::EmptyBracket { offset: start });
        }
        let kind = if inner.starts_with("http") {
            TokenKind::Iri
        } else if placeholder_index(&inner).is_some() {
            TokenKind::Placeholder
        } else {
            TokenKind::Mention
        };
        self.push(kind, format!("<{inner}>"), start);
        Ok(())
    }

    fn lex_variable(&mut self, start: usize) -> Result<(), SparqlError> {
        let mut end = self.pos + 1;
        while self.chars.get(end).is_some_and(|&c| is_ident_char(c)) {
            end += 1;
        }
        if end == self.pos + 1 {
            return Err(SparqlError::IllegalCharacter {
                ch: self.chars[start],
                offset: start,
            });
        }
        let name: String = self.chars[self.pos + 1..end].iter().collect();
        self.pos = end;
        self.push(TokenKind::Variable, format!("?{name}"), start);
        Ok(())
    }

    fn lex_string(&mut self, start: usize, quote: char) -> Result<(), SparqlError> {
        let mut end = self.pos + 1;
        loop {
            match self.chars.get(end) {
                None | Some('\n') => return Err(SparqlError::UnterminatedString { offset: start }),
                Some('\\') => end += 2,
                Some(&c) if c == quote => break,
                Some(_) => end += 1,
            }
        }
        end += 1;
        // Optional datatype or language tag belongs to the literal token.
        if self.chars.get(end) == Some(&'^') && self.chars.get(end + 1) == Some(&'^') {
            if self.chars.get(end + 2) != Some(&'<') {
                return Err(SparqlError::IllegalCharacter {
                    ch: '^',
                    offset: end,
                });
            }
            let mut close = end + 3;
            loop {
                match self.chars.get(close) {
                    None | Some('\n') => {
                        return Err(SparqlError::UnterminatedBracket { offset: end + 2 })
                    }
                    Some('>') => break,
                    Some(_) => close += 1,
                }
            }
            end = close + 1;
        } else if self.chars.get(end) == Some(&'@') {
            end += 1;
            while self
                .chars
                .get(end)
                .is_some_and(|&c| c.is_ascii_alphanumeric() || c == '-')
            {
                end += 1;
            }
        }
        let text: String = self.chars[start..end].iter().collect();
        self.pos = end;
        self.push(TokenKind::StringLiteral, text, start);
        Ok(())
    }

    fn lex_number(&mut self, start: usize) {
        let mut end = self.pos;
        while self.chars.get(end).is_some_and(|c| c.is_ascii_digit()) {
            end += 1;
        }
        if self.chars.get(end) == Some(&'.')
            && self.chars.get(end + 1).is_some_and(|c| c.is_ascii_digit())
        {
            end += 1;
            while self.chars.get(end).is_some_and(|c| c.is_ascii_digit()) {
                end += 1;
            }
        }
        let text: String = self.chars[start..end].iter().collect();
        self.pos = end;
        self.push(TokenKind::NumericLiteral, text, start);
    }

    fn read_word(&self, from: usize) -> (String, usize) {
        let mut end = from;
        while self
            .chars
            .get(end)
            .is_some_and(|&c| is_ident_char(c) || c == ':')
        {
            end += 1;
        }
        (self.chars[from..end].iter().collect(), end)
    }

    fn lex_word(&mut self, start: usize) {
        let (word, end) = self.read_word(self.pos);
        let upper = word.to_ascii_uppercase();
        for (first, second) in PAIRED_KEYWORDS {
            if upper == *first {
                let mut next = end;
                while self.chars.get(next).is_some_and(|c| c.is_whitespace()) {
                    next += 1;
                }
                let (follow, follow_end) = self.read_word(next);
                if follow.to_ascii_uppercase() == *second {
                    self.pos = follow_end;
                    self.push(TokenKind::Keyword, format!("{first} {second}"), start);
                    return;
                }
            }
        }
        self.pos = end;
        if SINGLE_KEYWORDS.contains(&upper.as_str()) {
            self.push(TokenKind::Keyword, upper, start);
        } else {
            self.push(TokenKind::Name, word, start);
        }
    }

    fn lex_punct(&mut self, start: usize, c: char) -> Result<(), SparqlError> {
        let two: Option<&str> = match (c, self.peek(1)) {
            ('!', Some('=')) => Some("!="),
            ('>', Some('=')) => Some(">="),
            ('&', Some('&')) => Some("&&"),
            ('|', Some('|')) => Some("||"),
            _ => None,
        };
        if let Some(op) = two {
            self.pos += 2;
            self.push(TokenKind::Punct, op.into(), start);
            return Ok(());
        }
        if matches!(
            c,
            '{' | '}' | '(' | ')' | '.' | ',' | ';' | '*' | '=' | '>' | '!' | '+' | '-' | '/'
        ) {
            self.pos += 1;
            self.push(TokenKind::Punct, c.to_string(), start);
            Ok(())
        } else {
            Err(SparqlError::IllegalCharacter { ch: c, offset: start })
        }
    }
}

/// Whether the canonical form puts a space between two adjacent tokens.
fn needs_space(prev: (TokenKind, &str), next: (TokenKind, &str)) -> bool {
    if prev.1 == "(" || next.1 == ")" {
        return false;
    }
    if next.1 == "(" {
        // Function-call style: COUNT(, ASC(, DESC(, FILTER(, BIND(
        return !(prev.0 == TokenKind::Keyword
            && matches!(prev.1, "COUNT" | "ASC" | "DESC" | "FILTER" | "BIND")
            || prev.0 == TokenKind::Name);
    }
    true
}

/// Joins token texts using the canonical whitespace rule: single spaces,
/// except none inside parentheses and none between a call-like keyword and
/// its opening parenthesis.
pub fn join_tokens<'a, I>(tokens: I) -> String
where
    I: IntoIterator<Item = (TokenKind, &'a str)>,
{
    let mut out = String::new();
    let mut prev: Option<(TokenKind, &str)> = None;
    for tok in tokens {
        if let Some(p) = prev {
            if needs_space(p, tok) {
                out.push(' ');
            }
        }
        out.push_str(tok.1);
        prev = Some(tok);
    }
    out
}

/// Canonical whitespace form of arbitrary tokenizable text.
pub fn normalize(text: &str) -> Result<String, SparqlError> {
    let tokens = tokenize(text)?;
    Ok(join_tokens(tokens.iter().map(|t| (t.kind, t.text.as_str()))))
}
