//! Reference evaluator for the query subset over an in-memory [`Graph`].
//!
//! Basic graph patterns are joined with a nested loop, filters apply to the
//! whole group they appear in, UNION is a bag union of the two branches and
//! solution modifiers run in SPARQL order: grouping, ORDER BY, projection,
//! DISTINCT, OFFSET and LIMIT.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::sparql::{
    CompareOp, Direction, Filter, GroupPattern, Literal, PatternElement, Projection, Query,
    QueryForm, Term, TriplePattern,
};

use super::graph::{Graph, Node};
use super::results::ResultSet;
use super::EndpointError;

pub type Solution = BTreeMap<String, Node>;

pub fn evaluate(query: &Query, graph: &Graph) -> Result<ResultSet, EndpointError> {
    let solutions = eval_group(&query.pattern, graph, vec![Solution::new()])?;
    match query.form {
        QueryForm::Ask => Ok(ResultSet::Boolean(!solutions.is_empty())),
        QueryForm::Select => select(query, solutions),
    }
}

fn unexecutable(term: &Term) -> EndpointError {
    let what = match term {
        Term::Mention(m) => format!("unlinked mention <{m}>"),
        Term::Placeholder(k) => format!("unfilled placeholder <entity_{k}>"),
        other => format!("{other:?}"),
    };
    EndpointError::UnsupportedConstruct(what)
}

/// The ground node for a non-variable term.
fn constant(term: &Term) -> Result<Option<Node>, EndpointError> {
    match term {
        Term::Variable(_) => Ok(None),
        Term::Iri(i) => Ok(Some(Node::Iri(i.as_str().to_string()))),
        Term::Literal(l) => Ok(Some(literal_node(l))),
        Term::Mention(_) | Term::Placeholder(_) => Err(unexecutable(term)),
    }
}

fn literal_node(l: &Literal) -> Node {
    match l {
        Literal::String { value, datatype } => Node::Literal {
            value: value.clone(),
            datatype: datatype.clone(),
        },
        Literal::Numeric(n) => Node::Literal {
            value: n.clone(),
            datatype: None,
        },
    }
}

/// Literals match on their lexical value; datatypes are not compared.
fn node_matches(pattern: &Node, node: &Node) -> bool {
    match (pattern, node) {
        (Node::Iri(a), Node::Iri(b)) => a == b,
        (Node::Literal { value: a, .. }, Node::Literal { value: b, .. }) => a == b,
        _ => false,
    }
}

/// Binds `term` to `node` in `solution`; false on conflict.
fn bind(solution: &mut Solution, term: &Term, constant: &Option<Node>, node: &Node) -> bool {
    match (term, constant) {
        (Term::Variable(v), _) => match solution.get(v.name()) {
            Some(existing) => existing == node,
            None => {
                solution.insert(v.name().to_string(), node.clone());
                true
            }
        },
        (_, Some(c)) => node_matches(c, node),
        (_, None) => false,
    }
}

fn join_triple(
    solutions: Vec<Solution>,
    pattern: &TriplePattern,
    graph: &Graph,
) -> Result<Vec<Solution>, EndpointError> {
    let subject = constant(&pattern.subject)?;
    let object = constant(&pattern.object)?;
    let candidates = graph.with_predicate(pattern.predicate.as_str());
    let mut out = Vec::new();
    for solution in &solutions {
        for triple in candidates {
            let mut extended = solution.clone();
            let subject_node = Node::Iri(triple.subject.clone());
            if bind(&mut extended, &pattern.subject, &subject, &subject_node)
                && bind(&mut extended, &pattern.object, &object, &triple.object)
            {
                out.push(extended);
            }
        }
    }
    Ok(out)
}

fn compatible_merge(a: &Solution, b: &Solution) -> Option<Solution> {
    let mut merged = a.clone();
    for (k, v) in b {
        match merged.get(k) {
            Some(existing) if existing != v => return None,
            Some(_) => {}
            None => {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    Some(merged)
}

fn eval_group(
    group: &GroupPattern,
    graph: &Graph,
    initial: Vec<Solution>,
) -> Result<Vec<Solution>, EndpointError> {
    let mut solutions = initial;
    let mut filters = Vec::new();
    for element in &group.elements {
        solutions = match element {
            PatternElement::Triple(t) => join_triple(solutions, t, graph)?,
            PatternElement::Union(a, b) => {
                let mut branch = eval_group(a, graph, vec![Solution::new()])?;
                branch.extend(eval_group(b, graph, vec![Solution::new()])?);
                let mut out = Vec::new();
                for s in &solutions {
                    out.extend(branch.iter().filter_map(|u| compatible_merge(s, u)));
                }
                out
            }
            PatternElement::Bind { value, target } => {
                let node = constant(value)?.ok_or_else(|| {
                    EndpointError::UnsupportedConstruct("BIND of a variable".into())
                })?;
                solutions
                    .into_iter()
                    .filter_map(|mut s| match s.get(target.name()) {
                        Some(existing) => (existing == &node).then_some(s),
                        None => {
                            s.insert(target.name().to_string(), node.clone());
                            Some(s)
                        }
                    })
                    .collect()
            }
            PatternElement::Filter(f) => {
                filters.push(f);
                solutions
            }
        };
    }
    let mut kept = Vec::with_capacity(solutions.len());
    'solutions: for s in solutions {
        for f in &filters {
            if !filter_holds(f, &s, graph)? {
                continue 'solutions;
            }
        }
        kept.push(s);
    }
    Ok(kept)
}

fn operand(term: &Term, solution: &Solution) -> Result<Option<Node>, EndpointError> {
    match term {
        Term::Variable(v) => Ok(solution.get(v.name()).cloned()),
        other => constant(other),
    }
}

/// Integer comparison when both sides parse as integers, otherwise string
/// comparison of lexical values. IRIs and literals never compare.
pub fn compare_nodes(a: &Node, b: &Node) -> Option<Ordering> {
    match (a, b) {
        (Node::Iri(x), Node::Iri(y)) => Some(x.cmp(y)),
        (Node::Literal { .. }, Node::Literal { .. }) => match (a.as_integer(), b.as_integer()) {
            (Some(x), Some(y)) => Some(x.cmp(&y)),
            _ => Some(a.value().cmp(b.value())),
        },
        _ => None,
    }
}

fn filter_holds(filter: &Filter, solution: &Solution, graph: &Graph) -> Result<bool, EndpointError> {
    match filter {
        Filter::NotExists(group) => {
            Ok(eval_group(group, graph, vec![solution.clone()])?.is_empty())
        }
        Filter::Compare { left, op, right } => {
            let (Some(l), Some(r)) = (operand(left, solution)?, operand(right, solution)?) else {
                // Unbound operands make the filter an error, which rejects.
                return Ok(false);
            };
            let ord = compare_nodes(&l, &r);
            Ok(match op {
                CompareOp::Eq => ord == Some(Ordering::Equal),
                CompareOp::Ne => ord != Some(Ordering::Equal),
                CompareOp::Lt => ord == Some(Ordering::Less),
                CompareOp::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
                CompareOp::Gt => ord == Some(Ordering::Greater),
                CompareOp::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
            })
        }
    }
}

fn aggregate(query: &Query, solutions: Vec<Solution>) -> Result<Vec<Solution>, EndpointError> {
    for p in &query.projection {
        if let Projection::Variable(v) = p {
            if !query.group_by.contains(v) {
                return Err(EndpointError::UnsupportedConstruct(format!(
                    "{v} projected in an aggregate query without GROUP BY"
                )));
            }
        }
    }
    let mut groups: Vec<(Vec<Option<Node>>, Vec<Solution>)> = Vec::new();
    let mut index: HashMap<Vec<Option<Node>>, usize> = HashMap::new();
    if query.group_by.is_empty() {
        // Without GROUP BY everything is one group, even when it is empty.
        groups.push((Vec::new(), solutions));
    } else {
        for s in solutions {
            let key: Vec<Option<Node>> = query
                .group_by
                .iter()
                .map(|v| s.get(v.name()).cloned())
                .collect();
            match index.get(&key) {
                Some(&i) => groups[i].1.push(s),
                None => {
                    index.insert(key.clone(), groups.len());
                    groups.push((key, vec![s]));
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let mut row = Solution::new();
        for (v, value) in query.group_by.iter().zip(key) {
            if let Some(value) = value {
                row.insert(v.name().to_string(), value);
            }
        }
        for p in &query.projection {
            if let Projection::Count {
                distinct,
                inner,
                alias,
            } = p
            {
                let values = members.iter().filter_map(|m| m.get(inner.name()));
                let n = if *distinct {
                    values.collect::<std::collections::BTreeSet<_>>().len()
                } else {
                    values.count()
                };
                row.insert(alias.name().to_string(), Node::integer(n as u64));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Unbound sorts first; otherwise [`compare_nodes`], with literals after IRIs.
fn order_key(a: Option<&Node>, b: Option<&Node>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => compare_nodes(x, y).unwrap_or_else(|| match x {
            Node::Iri(_) => Ordering::Less,
            Node::Literal { .. } => Ordering::Greater,
        }),
    }
}

fn select(query: &Query, solutions: Vec<Solution>) -> Result<ResultSet, EndpointError> {
    let mut rows = if query.has_count() || !query.group_by.is_empty() {
        aggregate(query, solutions)?
    } else {
        solutions
    };
    if let Some(order) = &query.order_by {
        let name = order.variable.name();
        rows.sort_by(|a, b| {
            let ord = order_key(a.get(name), b.get(name));
            match order.direction {
                Direction::Asc => ord,
                Direction::Desc => ord.reverse(),
            }
        });
    }
    let variables: Vec<String> = query
        .projection
        .iter()
        .map(|p| match p {
            Projection::Variable(v) => v.name().to_string(),
            Projection::Count { alias, .. } => alias.name().to_string(),
        })
        .collect();
    let mut projected: Vec<Solution> = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .filter(|(k, _)| variables.contains(k))
                .collect()
        })
        .collect();
    if query.distinct {
        let mut seen = std::collections::HashSet::new();
        projected.retain(|r| seen.insert(r.clone()));
    }
    let offset = query.offset.unwrap_or(0) as usize;
    let rows: Vec<Solution> = projected
        .into_iter()
        .skip(offset)
        .take(query.limit.map_or(usize::MAX, |l| l as usize))
        .collect();
    Ok(ResultSet::Bindings { variables, rows })
}
