//! Shared pieces for the integration tests: seeded generators, independent
//! oracles and small HTTP mocks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

use dblp_kgqa::endpoint::{EndpointError, Graph, Node, QueryExecutor, ResultSet, XSD_INTEGER};
use dblp_kgqa::sparql::{
    CompareOp, Direction, Filter, GroupPattern, Iri, Literal, OrderBy, PatternElement, Projection, Query, QueryForm,
    Term, TriplePattern, Variable, DEFAULT_RELATIONS,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs the CLI in-process and returns (exit code, stdout).
pub fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut input: &[u8] = b"";
    let code = dblp_kgqa::cli::run(std::iter::once("dblp-kgqa").chain(args.iter().copied()), &mut out, &mut input);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

// ---------------------------------------------------------------------------
// Query generators

pub fn relations() -> Vec<String> {
    DEFAULT_RELATIONS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

const VAR_NAMES: &[&str] = &["answer", "x", "y", "p", "count", "v_1", "año", "Z9"];
const MENTION_WORDS: &[&str] = &[
    "Ruijie Wang",
    "Luca Rossetto",
    "Müller",
    "O'Brien",
    "A. B. Smith",
    "C++ & \"quotes\"",
    "{braces} and (parens)",
    "trailing space ",
    "entity_01",
    "entity",
    "北京大学",
    "ISWC 2023",
    "x=y",
    "semi; colon",
];
const ENTITY_IRIS: &[&str] = &[
    "https://dblp.org/pid/57/5759-3",
    "https://dblp.org/pid/156/1623",
    "https://dblp.org/rec/conf/esws/WangR23",
    "https://dblp.org/streams/conf/iswc",
    "http://example.org/thing#1",
];
const OTHER_IRIS: &[&str] = &[
    "https://dblp.org/rdf/schema#Publication",
    "https://dblp.org/rdf/schema#Person",
    "http://www.w3.org/2001/XMLSchema#gYear",
];
const LITERAL_CHARS: &[char] = &['a', 'Z', ' ', '"', '\\', '\n', '\t', '\r', '\'', 'é', '<', '>', '{', '.', '?', '7'];

/// Random valid ASTs. `placeholders` allows `<entity_k>` slots; entity
/// terms come from small pools so repeats occur.
pub struct QueryGen {
    pub rng: ChaCha8Rng,
    pub placeholders: bool,
    relations: Vec<String>,
    mentions: Vec<String>,
}

impl QueryGen {
    pub fn new(seed: u64, placeholders: bool) -> Self {
        let mut g = Self {
            rng: rng(seed),
            placeholders,
            relations: relations(),
            mentions: MENTION_WORDS.iter().map(|s| s.to_string()).collect(),
        };
        for _ in 0..6 {
            let m = g.random_mention();
            g.mentions.push(m);
        }
        g
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        items.choose(&mut self.rng).expect("non-empty pool")
    }

    /// A mention the lexer reads back verbatim: no angle brackets or
    /// newlines, not an IRI or placeholder, and no leading character that
    /// would make `<` a comparison operator.
    fn random_mention(&mut self) -> String {
        const ALPHABET: &[char] = &['a', 'b', 'Q', ' ', '-', '.', ',', '\'', '"', '&', 'ü', '日', '(', '=', '?', '1'];
        loop {
            let len = self.rng.gen_range(1..12);
            let s: String = (0..len).map(|_| *ALPHABET.choose(&mut self.rng).unwrap()).collect();
            let first = s.chars().next().unwrap();
            if !first.is_whitespace() && !"=?$(\"'".contains(first) && !s.starts_with("http") {
                return s;
            }
        }
    }

    pub fn variable(&mut self) -> Variable {
        Variable::new(*self.pick(VAR_NAMES))
    }

    pub fn mention(&mut self) -> Term {
        let i = self.rng.gen_range(0..self.mentions.len());
        Term::Mention(self.mentions[i].clone())
    }

    pub fn entity_iri(&mut self) -> Term {
        if self.rng.gen_bool(0.7) {
            Term::iri(self.pick(ENTITY_IRIS))
        } else {
            Term::iri(&format!("https://dblp.org/pid/{}/{}", self.rng.gen_range(1..400), self.rng.gen_range(1..9999)))
        }
    }

    pub fn literal(&mut self) -> Literal {
        match self.rng.gen_range(0..4) {
            0 => Literal::Numeric(self.rng.gen_range(0..3000u32).to_string()),
            1 => Literal::Numeric(format!("{}.{}", self.rng.gen_range(0..100), self.rng.gen_range(0..100))),
            _ => {
                let len = self.rng.gen_range(0..8);
                let value: String = (0..len).map(|_| *LITERAL_CHARS.choose(&mut self.rng).unwrap()).collect();
                let datatype = match self.rng.gen_range(0..3) {
                    0 => Some(XSD_INTEGER.to_string()),
                    1 => Some("http://www.w3.org/2001/XMLSchema#gYear".to_string()),
                    _ => None,
                };
                Literal::String { value, datatype }
            }
        }
    }

    pub fn term(&mut self) -> Term {
        let kinds = if self.placeholders { 6 } else { 5 };
        match self.rng.gen_range(0..kinds) {
            0 | 1 => Term::Variable(self.variable()),
            2 => self.mention(),
            3 => {
                if self.rng.gen_bool(0.5) {
                    self.entity_iri()
                } else {
                    Term::iri(self.pick(OTHER_IRIS))
                }
            }
            4 => Term::Literal(self.literal()),
            _ => Term::Placeholder(self.rng.gen_range(1..6)),
        }
    }

    fn predicate(&mut self) -> String {
        let i = self.rng.gen_range(0..self.relations.len());
        self.relations[i].clone()
    }

    pub fn triple(&mut self) -> TriplePattern {
        let subject = self.term();
        let predicate = self.predicate();
        let object = self.term();
        TriplePattern::new(subject, &predicate, object)
    }

    pub fn group(&mut self, depth: u32) -> GroupPattern {
        let n = self.rng.gen_range(1..4);
        let mut elements = Vec::new();
        for _ in 0..n {
            let roll = self.rng.gen_range(0..10);
            let element = match roll {
                0 if depth < 2 => PatternElement::Union(self.group(depth + 1), self.group(depth + 1)),
                1 if depth < 2 => PatternElement::Filter(Filter::NotExists(self.group(depth + 1))),
                2 => PatternElement::Filter(Filter::Compare {
                    left: self.term(),
                    op: *self.pick(&CompareOp::ALL),
                    right: self.term(),
                }),
                3 => {
                    let value = loop {
                        let t = self.term();
                        if !matches!(t, Term::Variable(_)) {
                            break t;
                        }
                    };
                    PatternElement::Bind {
                        value,
                        target: self.variable(),
                    }
                }
                _ => PatternElement::Triple(self.triple()),
            };
            elements.push(element);
        }
        GroupPattern::new(elements)
    }

    /// A query that satisfies the parser's scoping rules.
    pub fn query(&mut self) -> Query {
        let mut pattern = self.group(0);
        // Guarantee a bound variable to project.
        let anchor = TriplePattern::new(Term::Variable(self.variable()), &self.predicate(), self.term());
        let at = self.rng.gen_range(0..=pattern.elements.len());
        pattern.elements.insert(at, PatternElement::Triple(anchor));

        let mut q = if self.rng.gen_bool(0.2) {
            Query::ask(pattern)
        } else {
            Query::select(Vec::new(), pattern)
        };
        let bound: Vec<Variable> = q.pattern_variables().into_iter().collect();
        if q.form == QueryForm::Select {
            q.distinct = self.rng.gen_bool(0.5);
            let mut aliases = Vec::new();
            let n = self.rng.gen_range(1..4);
            for _ in 0..n {
                if self.rng.gen_bool(0.25) {
                    let alias = Variable::new(format!("c{}", aliases.len()));
                    aliases.push(alias.clone());
                    q.projection.push(Projection::Count {
                        distinct: self.rng.gen_bool(0.5),
                        inner: self.pick(&bound).clone(),
                        alias,
                    });
                } else {
                    q.projection.push(Projection::Variable(self.pick(&bound).clone()));
                }
            }
            if self.rng.gen_bool(0.3) {
                let k = self.rng.gen_range(1..=bound.len());
                q.group_by = bound.choose_multiple(&mut self.rng, k).cloned().collect();
            }
            if self.rng.gen_bool(0.4) {
                let mut keys = bound.clone();
                keys.extend(aliases);
                q.order_by = Some(OrderBy {
                    variable: self.pick(&keys).clone(),
                    direction: if self.rng.gen_bool(0.5) { Direction::Asc } else { Direction::Desc },
                });
            }
        }
        if self.rng.gen_bool(0.3) {
            q.limit = Some(self.rng.gen_range(0..1000));
        }
        if self.rng.gen_bool(0.2) {
            q.offset = Some(self.rng.gen_range(0..50));
        }
        q
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// Textbook Levenshtein distance with a full (m+1)x(n+1) table.
pub fn oracle_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

pub fn oracle_similarity(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        1.0
    } else {
        1.0 - oracle_edit_distance(a, b) as f64 / n as f64
    }
}

/// One evaluator-oracle instance: a small graph and a basic graph pattern
/// query over it.
pub struct BgpInstance {
    pub graph: Graph,
    pub triples: Vec<(Node, String, Node)>,
    pub query: Query,
}

const EX: &str = "http://ex.org/";

pub fn random_bgp_instance(r: &mut ChaCha8Rng) -> BgpInstance {
    let iris: Vec<Node> = (0..6).map(|i| Node::iri(format!("{EX}e{i}"))).collect();
    let predicates: Vec<String> = (0..3).map(|i| format!("{EX}p{i}")).collect();
    let literals: Vec<Node> = vec![
        Node::integer(1),
        Node::integer(3),
        Node::integer(12),
        Node::literal("a"),
        Node::literal("b"),
        Node::literal("12"),
    ];
    let mut graph = Graph::new();
    let mut triples = Vec::new();
    let n = r.gen_range(0..=30);
    for _ in 0..n {
        let s = iris.choose(r).unwrap().clone();
        let p = predicates.choose(r).unwrap().clone();
        let o = if r.gen_bool(0.6) {
            iris.choose(r).unwrap().clone()
        } else {
            literals.choose(r).unwrap().clone()
        };
        if graph.add(s.value(), &p, o.clone()) {
            triples.push((s, p, o));
        }
    }

    let vars = ["a", "b", "c"];
    let constant = |r: &mut ChaCha8Rng, object: bool| -> Term {
        if object && r.gen_bool(0.35) {
            match r.gen_range(0..4) {
                0 => Term::Literal(Literal::Numeric(["1", "3", "12", "7"].choose(r).unwrap().to_string())),
                1 => Term::Literal(Literal::String {
                    value: "12".into(),
                    datatype: Some(XSD_INTEGER.into()),
                }),
                _ => Term::Literal(Literal::plain(*["a", "b", "z"].choose(r).unwrap())),
            }
        } else {
            // e6 never occurs in the graph.
            Term::iri(&format!("{EX}e{}", r.gen_range(0..7)))
        }
    };
    let mut patterns = Vec::new();
    for _ in 0..r.gen_range(1..=3) {
        let s = if r.gen_bool(0.7) { Term::var(vars.choose(r).unwrap()) } else { constant(r, false) };
        let o = if r.gen_bool(0.7) { Term::var(vars.choose(r).unwrap()) } else { constant(r, true) };
        patterns.push(PatternElement::Triple(TriplePattern::new(s, predicates.choose(r).unwrap(), o)));
    }
    let mut q = Query::select(Vec::new(), GroupPattern::new(patterns));
    let bound: Vec<Variable> = q.pattern_variables().into_iter().collect();
    if !bound.is_empty() && r.gen_bool(0.4) {
        let left = Term::Variable(bound.choose(r).unwrap().clone());
        let right = if r.gen_bool(0.5) {
            Term::Variable(bound.choose(r).unwrap().clone())
        } else {
            constant(r, true)
        };
        q.pattern.elements.push(PatternElement::Filter(Filter::Compare {
            left,
            op: *CompareOp::ALL.choose(r).unwrap(),
            right,
        }));
    }
    if bound.is_empty() || r.gen_bool(0.15) {
        q = Query::ask(q.pattern);
    } else {
        let k = r.gen_range(1..=bound.len());
        q.projection = bound.choose_multiple(r, k).cloned().map(Projection::Variable).collect();
        q.distinct = r.gen_bool(0.5);
    }
    BgpInstance { graph, triples, query: q }
}

/// Rows as sets of (variable, node) maps, or the ASK result.
#[derive(Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    Rows(BTreeSet<BTreeMap<String, Node>>),
    Boolean(bool),
}

impl OracleAnswer {
    pub fn from_result(rs: &ResultSet) -> Self {
        match rs {
            ResultSet::Boolean(b) => OracleAnswer::Boolean(*b),
            ResultSet::Bindings { rows, .. } => OracleAnswer::Rows(rows.iter().cloned().collect()),
        }
    }
}

fn oracle_constant(term: &Term) -> Node {
    match term {
        Term::Iri(i) => Node::iri(i.as_str()),
        Term::Literal(l) => Node::literal(l.lexical()),
        other => panic!("not a constant: {other:?}"),
    }
}

/// Literals match constants by lexical form; IRIs by identity.
fn oracle_term_matches(term: &Term, assignment: &BTreeMap<String, Node>, node: &Node) -> bool {
    match term {
        Term::Variable(v) => assignment.get(v.name()) == Some(node),
        Term::Iri(i) => matches!(node, Node::Iri(x) if x == i.as_str()),
        Term::Literal(l) => matches!(node, Node::Literal { value, .. } if value == l.lexical()),
        _ => false,
    }
}

fn oracle_cmp(a: &Node, b: &Node) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Node::Iri(x), Node::Iri(y)) => Some(x.cmp(y)),
        (Node::Literal { value: x, .. }, Node::Literal { value: y, .. }) => {
            match (x.parse::<i128>(), y.parse::<i128>()) {
                (Ok(i), Ok(j)) => Some(i.cmp(&j)),
                _ => Some(x.cmp(y)),
            }
        }
        _ => None,
    }
}

fn oracle_filter(f: &Filter, assignment: &BTreeMap<String, Node>) -> bool {
    use std::cmp::Ordering::*;
    let Filter::Compare { left, op, right } = f else {
        panic!("only comparisons are generated")
    };
    let value = |t: &Term| match t {
        Term::Variable(v) => assignment[v.name()].clone(),
        other => oracle_constant(other),
    };
    let ord = oracle_cmp(&value(left), &value(right));
    match op {
        CompareOp::Eq => ord == Some(Equal),
        CompareOp::Ne => ord != Some(Equal),
        CompareOp::Lt => ord == Some(Less),
        CompareOp::Le => matches!(ord, Some(Less | Equal)),
        CompareOp::Gt => ord == Some(Greater),
        CompareOp::Ge => matches!(ord, Some(Greater | Equal)),
    }
}

/// Tries every assignment of graph nodes to the query's variables and keeps
/// those under which every pattern is a graph triple and every filter holds.
pub fn oracle_evaluate(instance: &BgpInstance) -> OracleAnswer {
    let q = &instance.query;
    let vars: Vec<String> = q.pattern_variables().iter().map(|v| v.name().to_string()).collect();
    let domain: BTreeSet<Node> = instance
        .triples
        .iter()
        .flat_map(|(s, _, o)| [s.clone(), o.clone()])
        .collect();
    let domain: Vec<Node> = domain.into_iter().collect();
    let mut rows = BTreeSet::new();
    let mut found = false;
    let total = domain.len().pow(vars.len() as u32);
    for mut code in 0..total {
        let mut assignment = BTreeMap::new();
        for v in &vars {
            assignment.insert(v.clone(), domain[code % domain.len()].clone());
            code /= domain.len();
        }
        let holds = q.pattern.elements.iter().all(|e| match e {
            PatternElement::Triple(t) => instance.triples.iter().any(|(s, p, o)| {
                p == t.predicate.as_str()
                    && oracle_term_matches(&t.subject, &assignment, s)
                    && oracle_term_matches(&t.object, &assignment, o)
            }),
            PatternElement::Filter(f) => oracle_filter(f, &assignment),
            other => panic!("not generated: {other:?}"),
        });
        if holds {
            found = true;
            let row = q
                .projection
                .iter()
                .map(|p| match p {
                    Projection::Variable(v) => (v.name().to_string(), assignment[v.name()].clone()),
                    Projection::Count { .. } => panic!("not generated"),
                })
                .collect();
            rows.insert(row);
        }
    }
    match q.form {
        QueryForm::Ask => OracleAnswer::Boolean(found),
        QueryForm::Select => OracleAnswer::Rows(rows),
    }
}

// ---------------------------------------------------------------------------
// Test doubles

/// An executor that records every query and answers only the
/// `accept_at`-th one (0-based) with a non-empty result.
pub struct CountingExecutor {
    pub executed: Mutex<Vec<String>>,
    pub accept_at: Option<usize>,
}

impl CountingExecutor {
    pub fn new(accept_at: Option<usize>) -> Self {
        Self {
            executed: Mutex::new(Vec::new()),
            accept_at,
        }
    }

    pub fn count(&self) -> usize {
        self.executed.lock().unwrap().len()
    }
}

impl QueryExecutor for CountingExecutor {
    fn execute(&self, query: &Query) -> Result<ResultSet, EndpointError> {
        let mut executed = self.executed.lock().unwrap();
        let index = executed.len();
        executed.push(dblp_kgqa::sparql::serialize(query));
        let rows = if Some(index) == self.accept_at {
            vec![BTreeMap::from([("answer".to_string(), Node::iri("https://dblp.org/rec/hit"))])]
        } else {
            Vec::new()
        };
        Ok(ResultSet::Bindings {
            variables: vec!["answer".into()],
            rows,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Recorded {
    pub at: Instant,
    pub method: String,
    pub url: String,
    pub body: String,
}

type Handler = dyn Fn(&Recorded) -> (u16, String) + Send + Sync;

/// A tiny HTTP server answering every request with `handler`.
pub struct MockHttp {
    server: Arc<tiny_http::Server>,
    pub base: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
    thread: Option<JoinHandle<()>>,
}

impl MockHttp {
    pub fn start(handler: impl Fn(&Recorded) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("ip address").port();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let thread = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = String::new();
                    let _ = request.as_reader().read_to_string(&mut body);
                    let recorded = Recorded {
                        at: Instant::now(),
                        method: request.method().to_string(),
                        url: request.url().to_string(),
                        body,
                    };
                    requests.lock().unwrap().push(recorded.clone());
                    let (status, text) = handler(&recorded);
                    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                    let _ = request.respond(tiny_http::Response::from_string(text).with_status_code(status).with_header(header));
                }
            })
        };
        Self {
            server,
            base: format!("http://127.0.0.1:{port}"),
            requests,
            thread: Some(thread),
        }
    }

    pub fn recorded(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockHttp {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}


/// A TCP listener that only counts connection attempts.
pub struct ConnectionCounter {
    pub port: u16,
    pub count: Arc<AtomicUsize>,
}

impl ConnectionCounter {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind counter");
        let port = listener.local_addr().unwrap().port();
        let count = Arc::new(AtomicUsize::new(0));
        let seen = Arc::clone(&count);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                seen.fetch_add(1, Ordering::SeqCst);
                drop(stream);
            }
        });
        Self { port, count }
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn connections(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }
}

/// A DBLP search API response listing `(label, url)` hits.
pub fn search_response(field: &str, hits: &[(&str, &str)]) -> serde_json::Value {
    let hit: Vec<serde_json::Value> = hits
        .iter()
        .map(|(label, url)| serde_json::json!({ "info": { field: label, "url": url } }))
        .collect();
    serde_json::json!({ "result": { "hits": { "@total": hits.len().to_string(), "hit": hit } } })
}

pub fn iri(s: &str) -> Iri {
    Iri::new(s)
}
