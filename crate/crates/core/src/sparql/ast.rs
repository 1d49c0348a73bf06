use std::collections::BTreeSet;
use std::fmt;

/// A query variable, stored without its leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

/// An absolute IRI, stored without angle brackets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(iri: impl Into<String>) -> Self {
        Self(iri.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    /// Quoted literal with an optional datatype IRI.
    String {
        value: String,
        datatype: Option<String>,
    },
    /// Unquoted numeral, kept as its exact decimal text.
    Numeric(String),
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Self {
        Literal::String {
            value: value.into(),
            datatype: None,
        }
    }

    /// The lexical value without quotes or datatype.
    pub fn lexical(&self) -> &str {
        match self {
            Literal::String { value, .. } => value,
            Literal::Numeric(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Variable(Variable),
    Iri(Iri),
    /// Natural-language entity mention, e.g. `<Ruijie Wang>`; stored without brackets.
    Mention(String),
    /// Template slot `<entity_k>`, k >= 1.
    Placeholder(u32),
    Literal(Literal),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Variable(Variable::new(name))
    }

    pub fn iri(iri: &str) -> Self {
        Term::Iri(Iri::new(iri))
    }

    pub fn mention(surface: &str) -> Self {
        Term::Mention(surface.to_string())
    }

    pub fn as_variable(&self) -> Option<&Variable> {
        match self {
            Term::Variable(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: &str, object: Term) -> Self {
        Self {
            subject,
            predicate: Iri::new(predicate),
            object,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "=" => CompareOp::Eq,
            "!=" => CompareOp::Ne,
            "<" => CompareOp::Lt,
            "<=" => CompareOp::Le,
            ">" => CompareOp::Gt,
            ">=" => CompareOp::Ge,
            _ => return None,
        })
    }

    pub const ALL: [CompareOp; 6] = [
        CompareOp::Eq,
        CompareOp::Ne,
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Gt,
        CompareOp::Ge,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Filter {
    Compare {
        left: Term,
        op: CompareOp,
        right: Term,
    },
    NotExists(GroupPattern),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternElement {
    Triple(TriplePattern),
    Filter(Filter),
    Union(GroupPattern, GroupPattern),
    Bind { value: Term, target: Variable },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GroupPattern {
    pub elements: Vec<PatternElement>,
}

impl GroupPattern {
    pub fn new(elements: Vec<PatternElement>) -> Self {
        Self { elements }
    }

    pub fn triples(triples: Vec<TriplePattern>) -> Self {
        Self::new(triples.into_iter().map(PatternElement::Triple).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryForm {
    Select,
    Ask,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Projection {
    Variable(Variable),
    Count {
        distinct: bool,
        inner: Variable,
        alias: Variable,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderBy {
    pub variable: Variable,
    pub direction: Direction,
}

/// Structured form shared by logical forms, templates and executable queries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub form: QueryForm,
    /// `SELECT DISTINCT`; always false for ASK.
    pub distinct: bool,
    /// Empty for ASK.
    pub projection: Vec<Projection>,
    pub pattern: GroupPattern,
    pub group_by: Vec<Variable>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl Query {
    pub fn select(projection: Vec<Projection>, pattern: GroupPattern) -> Self {
        Self {
            form: QueryForm::Select,
            distinct: false,
            projection,
            pattern,
            group_by: Vec::new(),
            order_by: None,
            limit: None,
            offset: None,
        }
    }

    pub fn ask(pattern: GroupPattern) -> Self {
        Self {
            form: QueryForm::Ask,
            ..Self::select(Vec::new(), pattern)
        }
    }

    pub fn has_count(&self) -> bool {
        self.projection
            .iter()
            .any(|p| matches!(p, Projection::Count { .. }))
    }

    /// Visits every term in pattern position, depth first, in textual order.
    pub fn for_each_term(&self, f: &mut impl FnMut(&Term)) {
        visit_group(&self.pattern, f);
    }

    /// Rewrites every term in pattern position (including filters and BIND
    /// values), in textual order.
    pub fn map_terms(&mut self, f: &mut impl FnMut(&Term) -> Term) {
        map_group(&mut self.pattern, f);
    }

    /// Variables that occur in some triple pattern or are BIND targets.
    pub fn pattern_variables(&self) -> BTreeSet<Variable> {
        let mut vars = BTreeSet::new();
        collect_bound(&self.pattern, &mut vars);
        vars
    }

    /// All triple patterns, depth first, in textual order.
    pub fn triple_patterns(&self) -> Vec<&TriplePattern> {
        let mut out = Vec::new();
        collect_triples(&self.pattern, &mut out);
        out
    }
}

fn visit_group(group: &GroupPattern, f: &mut impl FnMut(&Term)) {
    for element in &group.elements {
        match element {
            PatternElement::Triple(t) => {
                f(&t.subject);
                f(&t.object);
            }
            PatternElement::Filter(Filter::Compare { left, right, .. }) => {
                f(left);
                f(right);
            }
            PatternElement::Filter(Filter::NotExists(g)) => visit_group(g, f),
            PatternElement::Union(a, b) => {
                visit_group(a, f);
                visit_group(b, f);
            }
            PatternElement::Bind { value, .. } => f(value),
        }
    }
}

fn map_group(group: &mut GroupPattern, f: &mut impl FnMut(&Term) -> Term) {
    for element in &mut group.elements {
        match element {
            PatternElement::Triple(t) => {
                t.subject = f(&t.subject);
                t.object = f(&t.object);
            }
            PatternElement::Filter(Filter::Compare { left, right, .. }) => {
                *left = f(left);
                *right = f(right);
            }
            PatternElement::Filter(Filter::NotExists(g)) => map_group(g, f),
            PatternElement::Union(a, b) => {
                map_group(a, f);
                map_group(b, f);
            }
            PatternElement::Bind { value, .. } => *value = f(value),
        }
    }
}

fn collect_bound(group: &GroupPattern, vars: &mut BTreeSet<Variable>) {
    for element in &group.elements {
        match element {
            PatternElement::Triple(t) => {
                for term in [&t.subject, &t.object] {
                    if let Term::Variable(v) = term {
                        vars.insert(v.clone());
                    }
                }
            }
            PatternElement::Union(a, b) => {
                collect_bound(a, vars);
                collect_bound(b, vars);
            }
            PatternElement::Bind { target, .. } => {
                vars.insert(target.clone());
            }
            // NOT EXISTS never binds outside its own scope.
            PatternElement::Filter(_) => {}
        }
    }
}

fn collect_triples<'a>(group: &'a GroupPattern, out: &mut Vec<&'a TriplePattern>) {
    for element in &group.elements {
        match element {
            PatternElement::Triple(t) => out.push(t),
            PatternElement::Union(a, b) => {
                collect_triples(a, out);
                collect_triples(b, out);
            }
            PatternElement::Filter(Filter::NotExists(g)) => collect_triples(g, out),
            _ => {}
        }
    }
}
