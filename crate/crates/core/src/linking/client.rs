use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::fsutil::write_atomic;

use super::{
    classify_mention_type, default_rules, ClassifyRule, EntityCandidate, EntityType, LinkError,
    Mention,
};

const DBLP_IRI_PREFIX: &str = "https://dblp.org/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    Live,
    Offline,
}

#[derive(Debug, Clone)]
pub struct LinkerConfig {
    pub api_base_url: String,
    pub mode: LinkMode,
    /// Directory of recorded responses; required offline.
    pub fixture_path: Option<PathBuf>,
    /// JSON file of raw responses keyed like fixtures; live mode only.
    pub cache_path: Option<PathBuf>,
    pub requests_per_second: f64,
    pub max_candidates: usize,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    pub rules: Vec<ClassifyRule>,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        Self {
            api_base_url: "https://dblp.org".to_string(),
            mode: LinkMode::Live,
            fixture_path: None,
            cache_path: None,
            requests_per_second: 1.0,
            max_candidates: 5,
            timeout: Duration::from_secs(10),
            retries: 2,
            backoff: Duration::from_millis(500),
            rules: default_rules(),
        }
    }
}

impl LinkerConfig {
    pub fn offline(fixture_path: impl Into<PathBuf>) -> Self {
        Self {
            mode: LinkMode::Offline,
            fixture_path: Some(fixture_path.into()),
            ..Self::default()
        }
    }
}

/// Trim, collapse inner whitespace, lowercase.
pub fn normalize_surface(surface: &str) -> String {
    surface
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn surface_key(entity_type: EntityType, surface: &str) -> String {
    let digest = Sha256::digest(normalize_surface(surface).as_bytes());
    format!("{}/{}", entity_type.api_segment(), hex::encode(digest))
}

/// Location of a fixture relative to the fixture directory.
pub fn fixture_relpath(entity_type: EntityType, surface: &str) -> PathBuf {
    PathBuf::from(format!("{}.json", surface_key(entity_type, surface)))
}

/// Stores a raw search response as the fixture for `(entity_type, surface)`.
pub fn write_fixture(
    dir: &Path,
    entity_type: EntityType,
    surface: &str,
    response: &Value,
) -> std::io::Result<PathBuf> {
    let path = dir.join(fixture_relpath(entity_type, surface));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, serde_json::to_string_pretty(response)?)?;
    Ok(path)
}

/// Spaces requests at least `interval` apart across all threads.
#[derive(Debug)]
struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn wait(&self) {
        let mut next = self.next.lock().unwrap();
        let now = Instant::now();
        if let Some(at) = *next {
            if at > now {
                std::thread::sleep(at - now);
            }
        }
        *next = Some(Instant::now() + self.interval);
    }
}

/// Builds `{base}/search/{segment}/api?q=..&format=json`.
pub fn search_url(base: &str, entity_type: EntityType, surface: &str) -> Result<url::Url, LinkError> {
    let mut url = url::Url::parse(base).map_err(|e| LinkError::InvalidConfig(format!("api base url: {e}")))?;
    url.path_segments_mut()
        .map_err(|_| LinkError::InvalidConfig(format!("api base url {base} cannot have a path")))?
        .pop_if_empty()
        .extend(["search", entity_type.api_segment(), "api"]);
    url.query_pairs_mut()
        .append_pair("q", surface)
        .append_pair("format", "json");
    Ok(url)
}

/// Turns a raw search response into ranked candidates.
pub fn parse_response(
    response: &Value,
    entity_type: EntityType,
    surface: &str,
    max_candidates: usize,
) -> Result<Vec<EntityCandidate>, LinkError> {
    let hits = response
        .get("result")
        .and_then(|r| r.get("hits"))
        .ok_or_else(|| LinkError::MalformedResponse("missing result.hits".into()))?;
    let hit_list: Vec<&Value> = match hits.get("hit") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(a)) => a.iter().collect(),
        // A single hit is sometimes not wrapped in an array.
        Some(one @ Value::Object(_)) => vec![one],
        Some(_) => return Err(LinkError::MalformedResponse("hits.hit is not a list".into())),
    };
    let mut out = Vec::new();
    for hit in hit_list {
        let info = hit
            .get("info")
            .ok_or_else(|| LinkError::MalformedResponse("hit without info".into()))?;
        let iri = info
            .get("url")
            .and_then(Value::as_str)
            .ok_or_else(|| LinkError::MalformedResponse("hit without info.url".into()))?;
        if !iri.starts_with(DBLP_IRI_PREFIX) {
            continue;
        }
        let label = match info.get(entity_type.label_field()) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Object(o)) => o.get("text").and_then(Value::as_str).unwrap_or("").to_string(),
            _ => String::new(),
        };
        out.push(EntityCandidate {
            iri: iri.to_string(),
            label,
            rank: out.len() as u32 + 1,
            entity_type,
        });
        if out.len() == max_candidates {
            break;
        }
    }
    if out.is_empty() {
        return Err(LinkError::NoCandidates {
            surface: surface.to_string(),
        });
    }
    Ok(out)
}

/// Resolves mentions to candidates. Shareable across threads.
#[derive(Debug)]
pub struct Linker {
    config: LinkerConfig,
    agent: Option<ureq::Agent>,
    limiter: RateLimiter,
    cache: Mutex<BTreeMap<String, Value>>,
    requests: AtomicUsize,
}

impl Linker {
    pub fn new(config: LinkerConfig) -> Result<Self, LinkError> {
        if config.max_candidates == 0 {
            return Err(LinkError::InvalidConfig("max_candidates must be at least 1".into()));
        }
        if !(config.requests_per_second > 0.0 && config.requests_per_second.is_finite()) {
            return Err(LinkError::InvalidConfig("requests_per_second must be positive".into()));
        }
        let agent = match config.mode {
            LinkMode::Offline => {
                match &config.fixture_path {
                    Some(p) if p.is_dir() => {}
                    Some(p) => {
                        return Err(LinkError::InvalidConfig(format!(
                            "fixture directory {} does not exist",
                            p.display()
                        )))
                    }
                    None => return Err(LinkError::InvalidConfig("offline mode needs a fixture directory".into())),
                }
                None
            }
            LinkMode::Live => {
                search_url(&config.api_base_url, EntityType::Author, "x")?;
                Some(ureq::AgentBuilder::new().timeout(config.timeout).build())
            }
        };
        let cache = match &config.cache_path {
            Some(p) if config.mode == LinkMode::Live && p.exists() => {
                let text = fs::read_to_string(p).map_err(|e| LinkError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| LinkError::Io(format!("cache {}: {e}", p.display())))?
            }
            _ => BTreeMap::new(),
        };
        Ok(Self {
            limiter: RateLimiter {
                interval: Duration::from_secs_f64(1.0 / config.requests_per_second),
                next: Mutex::new(None),
            },
            config,
            agent,
            cache: Mutex::new(cache),
            requests: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &LinkerConfig {
        &self.config
    }

    /// Number of HTTP requests sent so far.
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn classify(&self, mention: &Mention) -> EntityType {
        classify_mention_type(mention, &self.config.rules)
    }

    pub fn link(&self, mention: &Mention) -> Result<Vec<EntityCandidate>, LinkError> {
        self.link_typed(&mention.surface, self.classify(mention))
    }

    pub fn link_typed(&self, surface: &str, entity_type: EntityType) -> Result<Vec<EntityCandidate>, LinkError> {
        if surface.trim().is_empty() {
            return Err(LinkError::EmptySurface);
        }
        let response = match self.config.mode {
            LinkMode::Offline => self.read_fixture(surface, entity_type)?,
            LinkMode::Live => self.cached_or_fetch(surface, entity_type)?,
        };
        parse_response(&response, entity_type, surface, self.config.max_candidates)
    }

    fn read_fixture(&self, surface: &str, entity_type: EntityType) -> Result<Value, LinkError> {
        let dir = self.config.fixture_path.as_deref().expect("checked in new");
        let path = dir.join(fixture_relpath(entity_type, surface));
        let text = fs::read_to_string(&path).map_err(|_| LinkError::FixtureMissing {
            surface: surface.to_string(),
            path: path.display().to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| LinkError::MalformedResponse(format!("{}: {e}", path.display())))
    }

    fn cached_or_fetch(&self, surface: &str, entity_type: EntityType) -> Result<Value, LinkError> {
        let key = surface_key(entity_type, surface);
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            debug!("cache hit for {surface:?} ({key})");
            return Ok(v.clone());
        }
        let response = self.fetch(surface, entity_type)?;
        let mut cache = self.cache.lock().unwrap();
        cache.insert(key, response.clone());
        if let Some(path) = &self.config.cache_path {
            let text = serde_json::to_string_pretty(&*cache).expect("JSON values serialize");
            write_atomic(path, &text).map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(response)
    }

    fn fetch(&self, surface: &str, entity_type: EntityType) -> Result<Value, LinkError> {
        let agent = self.agent.as_ref().expect("live mode has an agent");
        let url = search_url(&self.config.api_base_url, entity_type, surface)?;
        let mut attempt = 0;
        loop {
            self.limiter.wait();
            self.requests.fetch_add(1, Ordering::SeqCst);
            let outcome = match agent.get(url.as_str()).call() {
                Ok(r) => r
                    .into_json::<Value>()
                    .map_err(|e| LinkError::MalformedResponse(e.to_string())),
                Err(ureq::Error::Status(status, _)) if status >= 500 || status == 429 => {
                    Err(LinkError::Network(format!("HTTP {status}")))
                }
                Err(ureq::Error::Status(status, _)) => Err(LinkError::MalformedResponse(format!("HTTP {status}"))),
                Err(ureq::Error::Transport(t)) => Err(LinkError::Network(t.to_string())),
            };
            match outcome {
                Err(LinkError::Network(e)) if attempt < self.config.retries => {
                    attempt += 1;
                    let wait = self.config.backoff * 2u32.pow(attempt - 1);
                    warn!("search API request for {surface:?} failed ({e}); retry {attempt} in {wait:?}");
                    std::thread::sleep(wait);
                }
                other => return other,
            }
        }
    }
}
