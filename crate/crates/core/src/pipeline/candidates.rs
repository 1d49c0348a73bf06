use crate::endpoint::ResultSet;
use crate::sparql::{placeholder_index, Literal, Projection, Query, QueryForm, Term, Vocabulary};
use crate::templates::{relexicalize, Template};

use super::PipelineError;

/// An executable query together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// 1-based rank of the template in the retrieval result.
    pub template_rank: usize,
    /// 1-based candidate rank chosen for each slot.
    pub combination: Vec<usize>,
    pub query: Query,
}

/// Rank tuples over `sizes` in lexicographic order with the last position
/// varying fastest, stopping after `cap` tuples.
pub fn rank_combinations(sizes: &[usize], cap: usize) -> Vec<Vec<usize>> {
    if sizes.contains(&0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut current = vec![1; sizes.len()];
    while out.len() < cap {
        out.push(current.clone());
        // Odometer increment from the right.
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < sizes[i] {
                current[i] += 1;
                break;
            }
            current[i] = 1;
        }
    }
    out
}

fn literals(query: &Query) -> Vec<Literal> {
    let mut out = Vec::new();
    query.for_each_term(&mut |t| {
        if let Term::Literal(l) = t {
            out.push(l.clone());
        }
    });
    out
}

/// Replaces the template's literals by `carried` in order, when the counts
/// agree. Keeps values such as years from the logical form.
fn carry_literals(query: &mut Query, carried: &[Literal]) {
    if literals(query).len() != carried.len() || carried.is_empty() {
        return;
    }
    let mut next = carried.iter();
    query.map_terms(&mut |t| match t {
        Term::Literal(_) => Term::Literal(next.next().expect("counts checked").clone()),
        other => other.clone(),
    });
}

/// Templates outer, slot-candidate combinations inner. A template is used
/// only when its placeholder count equals the number of slots.
pub fn enumerate_candidates(
    templates: &[&Template],
    slots: &[Vec<Term>],
    max_combinations: usize,
    carried_literals: Option<&[Literal]>,
) -> Result<Vec<Candidate>, PipelineError> {
    let sizes: Vec<usize> = slots.iter().map(Vec::len).collect();
    let combinations = rank_combinations(&sizes, max_combinations);
    let mut out = Vec::new();
    for (rank, template) in templates.iter().enumerate() {
        if template.placeholder_count != slots.len() {
            continue;
        }
        for combination in &combinations {
            let terms: Vec<Term> = combination
                .iter()
                .zip(slots)
                .map(|(r, options)| options[r - 1].clone())
                .collect();
            let Ok(mut query) = relexicalize(template.query(), &terms) else {
                continue;
            };
            if let Some(carried) = carried_literals {
                carry_literals(&mut query, carried);
            }
            out.push(Candidate {
                template_rank: rank + 1,
                combination: combination.clone(),
                query,
            });
        }
    }
    if out.is_empty() {
        return Err(PipelineError::NoViableCandidate);
    }
    Ok(out)
}

/// Literals of a parsed logical form, for [`enumerate_candidates`].
pub fn logical_form_literals(query: &Query) -> Vec<Literal> {
    literals(query)
}

/// Whether an execution result counts as an answer.
pub fn is_answer(result: &ResultSet, query: &Query) -> bool {
    match (result, query.form) {
        (ResultSet::Boolean(_), _) | (_, QueryForm::Ask) => true,
        (ResultSet::Bindings { rows, .. }, QueryForm::Select) => {
            let count_alias = query.projection.iter().find_map(|p| match p {
                Projection::Count { alias, .. } => Some(alias.name().to_string()),
                Projection::Variable(_) => None,
            });
            match count_alias {
                None => !rows.is_empty(),
                Some(alias) => rows
                    .iter()
                    .filter_map(|r| r.get(&alias))
                    .any(|n| n.as_integer().is_some_and(|c| c > 0)),
            }
        }
    }
}

/// Delexicalizes text that does not parse: every bracketed mention or
/// entity IRI becomes `<entity_k>`. Returns the probe text and the slots.
pub fn lenient_delexicalize(text: &str, vocab: &Vocabulary) -> (String, Vec<Term>) {
    let mut out = String::new();
    let mut slots: Vec<Term> = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let starts_term = after
            .chars()
            .next()
            .is_some_and(|c| !c.is_whitespace() && !"=?$(\"'".contains(c));
        let close = after.find(['>', '\n']).filter(|&i| after.as_bytes()[i] == b'>');
        match (starts_term, close) {
            (true, Some(close)) => {
                let inner = &after[..close];
                let term = if inner.starts_with("http") {
                    vocab.is_entity_iri(inner).then(|| Term::iri(inner))
                } else if placeholder_index(inner).is_some() {
                    None
                } else {
                    Some(Term::mention(inner.trim()))
                };
                match term {
                    Some(term) => {
                        let k = match slots.iter().position(|s| *s == term) {
                            Some(i) => i + 1,
                            None => {
                                slots.push(term);
                                slots.len()
                            }
                        };
                        out.push_str(&format!("<entity_{k}>"));
                    }
                    None => {
                        out.push('<');
                        out.push_str(inner);
                        out.push('>');
                    }
                }
                rest = &after[close + 1..];
            }
            _ => {
                out.push('<');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    let probe = out.split_whitespace().collect::<Vec<_>>().join(" ");
    (probe, slots)
}
