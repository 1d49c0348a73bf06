//! Answer retrieval: a remote SPARQL endpoint client and an in-memory
//! graph with a reference evaluator for offline runs.

mod eval;
mod graph;
mod mock;
mod remote;
mod results;

pub use eval::{compare_nodes, evaluate, Solution};
pub use graph::{Graph, Node, Triple, XSD_INTEGER};
pub use mock::{MockBehavior, MockEndpoint};
pub use remote::{RemoteConfig, RemoteEndpoint, RESULTS_JSON};
pub use results::ResultSet;

use thiserror::Error;

use crate::sparql::Query;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("graph line {line}: {reason}")]
    GraphParse { line: usize, reason: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("endpoint timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed results: {0}")]
    MalformedResults(String),
    #[error("{0}")]
    Io(String),
}

impl EndpointError {
    pub fn is_transient(&self) -> bool {
        match self {
            EndpointError::Timeout | EndpointError::Network(_) => true,
            EndpointError::Http { status, .. } => *status >= 500 || *status == 429,
            _ => false,
        }
    }
}

/// Anything that can run an executable query.
pub trait QueryExecutor: Send + Sync {
    fn execute(&self, query: &Query) -> Result<ResultSet, EndpointError>;
}

/// A graph held in memory, queried with [`evaluate`].
#[derive(Debug, Clone, Default)]
pub struct LocalGraph(pub Graph);

impl QueryExecutor for LocalGraph {
    fn execute(&self, query: &Query) -> Result<ResultSet, EndpointError> {
        evaluate(query, &self.0)
    }
}

impl<T: QueryExecutor + ?Sized> QueryExecutor for std::sync::Arc<T> {
    fn execute(&self, query: &Query) -> Result<ResultSet, EndpointError> {
        (**self).execute(query)
    }
}
