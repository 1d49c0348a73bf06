//! Question answering over the DBLP scholarly knowledge graph.
//!
//! A question goes through four steps: it is translated into a logical form
//! (a SPARQL query whose entity slots still hold natural-language mentions),
//! the mentions are linked to DBLP IRIs through the DBLP search API, the
//! delexicalized form is matched against a base of templates mined from
//! training queries, and the filled-in candidates are executed against a
//! SPARQL endpoint until one returns an answer.

pub mod cli;
pub mod endpoint;
pub mod eval;
pub mod fsutil;
pub mod linking;
pub mod pipeline;
pub mod sparql;
pub mod templates;
pub mod translator;
