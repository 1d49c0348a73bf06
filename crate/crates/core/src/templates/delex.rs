use crate::sparql::{Query, Term, Vocabulary};

use super::TemplateError;

/// Whether a term occupies an entity slot: a mention, an entity IRI or an
/// existing placeholder.
pub fn is_entity_term(term: &Term, vocab: &Vocabulary) -> bool {
    match term {
        Term::Mention(_) | Term::Placeholder(_) => true,
        Term::Iri(iri) => vocab.is_entity_iri(iri.as_str()),
        _ => false,
    }
}

/// Replaces every entity term with `<entity_k>`, numbering by first
/// appearance. Identical terms share one placeholder; `bindings[k - 1]` is
/// the term that `<entity_k>` replaced.
pub fn delexicalize(query: &Query, vocab: &Vocabulary) -> (Query, Vec<Term>) {
    let mut template = query.clone();
    let mut bindings: Vec<Term> = Vec::new();
    template.map_terms(&mut |term| {
        if !is_entity_term(term, vocab) {
            return term.clone();
        }
        let index = match bindings.iter().position(|b| b == term) {
            Some(i) => i,
            None => {
                bindings.push(term.clone());
                bindings.len() - 1
            }
        };
        Term::Placeholder(index as u32 + 1)
    });
    (template, bindings)
}

/// Largest placeholder index in the query (0 when there is none).
pub fn max_placeholder(query: &Query) -> usize {
    let mut max = 0;
    query.for_each_term(&mut |t| {
        if let Term::Placeholder(k) = t {
            max = max.max(*k as usize);
        }
    });
    max
}

/// Fills `<entity_k>` with `terms[k - 1]`.
pub fn relexicalize(template: &Query, terms: &[Term]) -> Result<Query, TemplateError> {
    let needed = max_placeholder(template);
    if terms.len() < needed {
        return Err(TemplateError::ArityMismatch {
            placeholders: needed,
            terms: terms.len(),
        });
    }
    let mut out = template.clone();
    out.map_terms(&mut |t| match t {
        Term::Placeholder(k) => terms[*k as usize - 1].clone(),
        other => other.clone(),
    });
    Ok(out)
}
