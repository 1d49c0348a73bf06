//! A local SPARQL endpoint that answers with [`evaluate`](super::evaluate)
//! over a fixture graph. Used by tests and by the `mock-endpoint` command.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tiny_http::{Header, Method, Response, Server};

use crate::sparql::parse;

use super::graph::Graph;
use super::{evaluate, EndpointError};

#[derive(Debug, Clone)]
pub enum MockBehavior {
    Serve(Graph),
    /// Answer every request with this status code.
    Fail(u16),
    /// Sleep before answering from the graph.
    Slow(Duration, Graph),
}

pub struct MockEndpoint {
    server: Arc<Server>,
    url: String,
    requests: Arc<AtomicUsize>,
    queries: Arc<Mutex<Vec<String>>>,
    worker: Option<JoinHandle<()>>,
}

fn query_from_request(request: &mut tiny_http::Request) -> Result<String, String> {
    let url = request.url().to_string();
    let from_pairs = |s: &str| {
        url::form_urlencoded::parse(s.as_bytes())
            .find(|(k, _)| k == "query")
            .map(|(_, v)| v.into_owned())
    };
    match request.method() {
        Method::Get => url
            .split_once('?')
            .and_then(|(_, q)| from_pairs(q))
            .ok_or_else(|| "missing `query` parameter".to_string()),
        Method::Post => {
            let mut body = String::new();
            request
                .as_reader()
                .read_to_string(&mut body)
                .map_err(|e| e.to_string())?;
            let is_raw = request.headers().iter().any(|h| {
                h.field.equiv("Content-Type")
                    && h.value.as_str().starts_with("application/sparql-query")
            });
            if is_raw {
                Ok(body)
            } else {
                from_pairs(&body).ok_or_else(|| "missing `query` form field".to_string())
            }
        }
        other => Err(format!("unsupported method {other}")),
    }
}

fn answer(graph: &Graph, query: &str) -> Result<String, (u16, String)> {
    let parsed = parse(query).map_err(|e| (400, e.to_string()))?;
    match evaluate(&parsed, graph) {
        Ok(rs) => Ok(rs.to_json().to_string()),
        Err(EndpointError::UnsupportedConstruct(c)) => Err((400, c)),
        Err(e) => Err((500, e.to_string())),
    }
}

impl MockEndpoint {
    /// Binds an ephemeral localhost port and serves until dropped.
    pub fn start(behavior: MockBehavior) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", behavior)
    }

    pub fn bind(addr: &str, behavior: MockBehavior) -> std::io::Result<Self> {
        let server = Server::http(addr).map_err(|e| std::io::Error::other(e.to_string()))?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("not an IP listener"))?;
        let server = Arc::new(server);
        let requests = Arc::new(AtomicUsize::new(0));
        let queries = Arc::new(Mutex::new(Vec::new()));
        let worker = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            let queries = Arc::clone(&queries);
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    requests.fetch_add(1, Ordering::SeqCst);
                    let json = Header::from_bytes("Content-Type", super::remote::RESULTS_JSON)
                        .expect("static header");
                    let reply = match query_from_request(&mut request) {
                        Err(e) => Response::from_string(e).with_status_code(400),
                        Ok(q) => {
                            queries.lock().unwrap().push(q.clone());
                            let outcome = match &behavior {
                                MockBehavior::Fail(code) => Err((*code, "injected failure".to_string())),
                                MockBehavior::Serve(g) => answer(g, &q),
                                MockBehavior::Slow(delay, g) => {
                                    std::thread::sleep(*delay);
                                    answer(g, &q)
                                }
                            };
                            match outcome {
                                Ok(body) => Response::from_string(body).with_header(json),
                                Err((code, msg)) => Response::from_string(msg).with_status_code(code),
                            }
                        }
                    };
                    let _ = request.respond(reply);
                }
            })
        };
        Ok(Self {
            server,
            url: format!("http://127.0.0.1:{port}/sparql"),
            requests,
            queries,
            worker: Some(worker),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Query texts received so far, in arrival order.
    pub fn queries(&self) -> Vec<String> {
        self.queries.lock().unwrap().clone()
    }

    /// Blocks the calling thread serving requests (for the CLI).
    pub fn wait(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
