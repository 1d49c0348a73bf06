use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use log::{debug, warn};

use crate::sparql::{parse, serialize_standard, Query};

use super::results::ResultSet;
use super::{EndpointError, QueryExecutor};

pub const RESULTS_JSON: &str = "application/sparql-results+json";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub url: String,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout: Duration::from_secs(15),
            retries: 2,
            backoff: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Client for a SPARQL protocol endpoint that answers in results JSON.
#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    config: RemoteConfig,
    agent: ureq::Agent,
    in_flight: Arc<InFlight>,
}

fn is_timeout(err: &ureq::Transport) -> bool {
    let mut source: Option<&(dyn std::error::Error + 'static)> = std::error::Error::source(err);
    while let Some(e) = source {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        source = e.source();
    }
    err.to_string().contains("timed out")
}

impl RemoteEndpoint {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let in_flight = Arc::new(InFlight {
            count: Mutex::new(0),
            freed: Condvar::new(),
            max: config.max_in_flight.max(1),
        });
        Self {
            config,
            agent,
            in_flight,
        }
    }

    pub fn url(&self) -> &str {
        &self.config.url
    }

    /// Parses `query` (it must be in the supported subset) and sends its
    /// standard rendering.
    pub fn execute_text(&self, query: &str) -> Result<ResultSet, EndpointError> {
        let parsed = parse(query).map_err(|e| EndpointError::InvalidQuery(e.to_string()))?;
        self.execute(&parsed)
    }

    fn attempt(&self, text: &str) -> Result<ResultSet, EndpointError> {
        let _permit = self.in_flight.acquire();
        let response = self
            .agent
            .post(&self.config.url)
            .set("Accept", RESULTS_JSON)
            .send_form(&[("query", text)]);
        match response {
            Ok(r) => {
                let body = r
                    .into_string()
                    .map_err(|e| EndpointError::MalformedResults(e.to_string()))?;
                ResultSet::parse(&body)
            }
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                Err(EndpointError::Http {
                    status,
                    body: body.chars().take(200).collect(),
                })
            }
            Err(ureq::Error::Transport(t)) if is_timeout(&t) => Err(EndpointError::Timeout),
            Err(ureq::Error::Transport(t)) => Err(EndpointError::Network(t.to_string())),
        }
    }
}

impl QueryExecutor for RemoteEndpoint {
    fn execute(&self, query: &Query) -> Result<ResultSet, EndpointError> {
        let text = serialize_standard(query);
        let mut attempt = 0;
        loop {
            match self.attempt(&text) {
                Err(e) if e.is_transient() && attempt < self.config.retries => {
                    attempt += 1;
                    let wait = self.config.backoff * 2u32.pow(attempt - 1);
                    warn!("endpoint {} failed ({e}); retry {attempt} in {wait:?}", self.config.url);
                    std::thread::sleep(wait);
                }
                other => {
                    debug!("executed query against {}", self.config.url);
                    return other;
                }
            }
        }
    }
}
