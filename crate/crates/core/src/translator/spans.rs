//! Heuristic mention spans for the baseline translator.

/// Capitalized words that begin questions or commands rather than names.
const LEADING_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "by", "can", "count", "did", "do", "does", "find", "for", "from",
    "give", "has", "have", "how", "i", "in", "is", "list", "name", "of", "on", "or", "return",
    "show", "tell", "the", "was", "were", "what", "when", "where", "which", "who", "whom", "whose",
    "with",
];

const OPEN_QUOTES: &[(char, char)] = &[('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}'), ('\u{2018}', '\u{2019}')];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    /// Char offset of the span in the question.
    pub start: usize,
    pub text: String,
}

fn is_boundary(c: Option<&char>) -> bool {
    c.is_none_or(|c| c.is_whitespace() || ",.;:?!()".contains(*c))
}

/// Quoted spans, opened at a word start and closed before a word end.
/// Returns the spans and a copy of the question with them blanked out.
fn quoted(chars: &[char]) -> (Vec<Span>, Vec<char>) {
    let mut spans = Vec::new();
    let mut rest = chars.to_vec();
    let mut i = 0;
    while i < chars.len() {
        let open = OPEN_QUOTES.iter().find(|(o, _)| *o == chars[i]);
        let at_word_start = i == 0 || is_boundary(chars.get(i - 1));
        if let (Some(&(_, close)), true) = (open, at_word_start) {
            let end = (i + 1..chars.len()).find(|&j| chars[j] == close && is_boundary(chars.get(j + 1)));
            if let Some(j) = end {
                let text: String = chars[i + 1..j].iter().collect::<String>().trim().to_string();
                if !text.is_empty() {
                    spans.push(Span { start: i, text });
                }
                for c in &mut rest[i..=j] {
                    *c = ' ';
                }
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    (spans, rest)
}

fn clean_word(word: &str) -> (&str, bool) {
    let trimmed = word.trim_end_matches(|c: char| ",.;:?!)".contains(c));
    let ends_clause = trimmed.len() != word.len();
    let trimmed = trimmed.trim_start_matches('(');
    match trimmed
        .strip_suffix("'s")
        .or_else(|| trimmed.strip_suffix("\u{2019}s"))
    {
        // A possessive closes the name it belongs to.
        Some(stem) => (stem, true),
        None => (trimmed, ends_clause),
    }
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Maximal runs of capitalized words, with leading stopwords removed.
fn capitalized_runs(chars: &[char]) -> Vec<Span> {
    let mut words: Vec<(usize, String)> = Vec::new();
    let mut start = None;
    for (i, c) in chars.iter().chain(std::iter::once(&' ')).enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                words.push((s, chars[s..i].iter().collect()));
                start = None;
            }
            _ => {}
        }
    }
    let mut spans = Vec::new();
    let mut run: Vec<(usize, &str)> = Vec::new();
    let flush = |run: &mut Vec<(usize, &str)>, spans: &mut Vec<Span>| {
        let skip = run
            .iter()
            .take_while(|(_, w)| LEADING_STOPWORDS.contains(&w.to_lowercase().as_str()))
            .count();
        if skip < run.len() {
            spans.push(Span {
                start: run[skip].0,
                text: run[skip..].iter().map(|(_, w)| *w).collect::<Vec<_>>().join(" "),
            });
        }
        run.clear();
    };
    for (offset, word) in &words {
        let (w, ends_clause) = clean_word(word);
        if !w.is_empty() && is_capitalized(w) {
            run.push((*offset, w));
        } else {
            flush(&mut run, &mut spans);
        }
        if ends_clause {
            flush(&mut run, &mut spans);
        }
    }
    flush(&mut run, &mut spans);
    spans
}

/// Entity spans ordered by position: quoted spans, then capitalized runs
/// outside the quotes.
pub fn entity_spans(question: &str) -> Vec<Span> {
    let chars: Vec<char> = question.chars().collect();
    let (mut spans, rest) = quoted(&chars);
    spans.extend(capitalized_runs(&rest));
    spans.sort_by_key(|s| s.start);
    spans
}

/// Four-digit tokens between 1000 and 2999, in order.
pub fn years(question: &str) -> Vec<String> {
    question
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| t.len() == 4 && t.chars().all(|c| c.is_ascii_digit()) && (t.starts_with('1') || t.starts_with('2')))
        .map(str::to_string)
        .collect()
}
