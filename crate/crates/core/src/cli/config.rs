//! The TOML run configuration and its merge with command-line flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::linking::{default_rules, ClassifyRule, LinkMode, LinkerConfig};
use crate::pipeline::PipelineConfig;
use crate::translator::Backend;

use super::args::RunArgs;
use super::CliError;

pub const DEFAULT_ENDPOINT: &str = "https://sparql.dblp.org/sparql";
pub const DEFAULT_MODEL_SERVER: &str = "http://127.0.0.1:8000";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub templates: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub offline: Option<bool>,
    pub pipeline: PipelineSection,
    pub translator: TranslatorSection,
    pub linker: LinkerSection,
    pub endpoint: EndpointSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub k_templates: Option<usize>,
    pub max_combinations_per_template: Option<usize>,
    pub prune_unused_entities: Option<bool>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslatorSection {
    pub backend: Option<Backend>,
    pub server_url: Option<String>,
    pub num_beams: Option<u32>,
    pub timeout_secs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkerSection {
    pub mode: Option<LinkMode>,
    pub api_base_url: Option<String>,
    pub fixture_path: Option<PathBuf>,
    pub cache_path: Option<PathBuf>,
    pub requests_per_second: Option<f64>,
    pub max_candidates: Option<usize>,
    pub timeout_secs: Option<f64>,
    pub retries: Option<u32>,
    pub rules: Option<Vec<ClassifyRule>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSection {
    pub url: Option<String>,
    pub graph: Option<PathBuf>,
    pub timeout_secs: Option<f64>,
    pub retries: Option<u32>,
    pub max_in_flight: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut config: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        // Relative paths in the file are relative to the file.
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.templates,
            &mut config.train,
            &mut config.relations,
            &mut config.linker.fixture_path,
            &mut config.linker.cache_path,
            &mut config.endpoint.graph,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnswerSource {
    Remote { url: String },
    Local { graph: PathBuf },
}

/// Everything needed to assemble a pipeline.
#[derive(Debug, Clone)]
pub struct Settings {
    pub templates: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub offline: bool,
    pub backend: Backend,
    pub server_url: String,
    pub num_beams: u32,
    pub translator_timeout: Duration,
    pub linker: LinkerConfig,
    pub graph: Option<PathBuf>,
    pub endpoint_url: String,
    pub endpoint_timeout: Duration,
    pub endpoint_retries: u32,
    pub max_in_flight: usize,
    pub pipeline: PipelineConfig,
    pub jobs: Option<usize>,
}

impl Settings {
    /// Where answers come from: a local graph when one is given, else the
    /// remote endpoint (not allowed offline).
    pub fn answer_source(&self) -> Result<AnswerSource, CliError> {
        match &self.graph {
            Some(graph) => Ok(AnswerSource::Local { graph: graph.clone() }),
            None if self.offline => Err(CliError::Usage("--offline needs a local --graph to answer from".into())),
            None => Ok(AnswerSource::Remote {
                url: self.endpoint_url.clone(),
            }),
        }
    }
}

fn seconds(value: Option<f64>, default: u64, key: &str) -> Result<Duration, CliError> {
    match value {
        None => Ok(Duration::from_secs(default)),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Duration::from_secs_f64(s)),
        Some(s) => Err(CliError::Usage(format!("{key} must be positive, got {s}"))),
    }
}

impl Settings {
    /// Flags win over the file; the file wins over defaults.
    pub fn resolve(flags: &RunArgs, file: FileConfig) -> Result<Self, CliError> {
        let offline = flags.offline || file.offline.unwrap_or(false);
        let backend = flags.backend.map(Backend::from).or(file.translator.backend).unwrap_or(Backend::Baseline);
        if offline && backend == Backend::Neural {
            return Err(CliError::Usage(
                "--offline cannot be combined with the neural backend (it needs a model server)".into(),
            ));
        }

        let defaults = LinkerConfig::default();
        let fixture_path = flags.fixtures.clone().or(file.linker.fixture_path);
        let link_mode = if offline || flags.fixtures.is_some() {
            LinkMode::Offline
        } else {
            file.linker.mode.unwrap_or(LinkMode::Live)
        };
        if link_mode == LinkMode::Offline && fixture_path.is_none() {
            return Err(CliError::Usage("offline linking needs --fixtures (or linker.fixture_path)".into()));
        }
        let linker = LinkerConfig {
            api_base_url: flags
                .api_base_url
                .clone()
                .or(file.linker.api_base_url)
                .unwrap_or(defaults.api_base_url),
            mode: link_mode,
            fixture_path,
            cache_path: flags.cache.clone().or(file.linker.cache_path),
            requests_per_second: flags
                .requests_per_second
                .or(file.linker.requests_per_second)
                .unwrap_or(defaults.requests_per_second),
            max_candidates: flags
                .max_candidates
                .or(file.linker.max_candidates)
                .unwrap_or(defaults.max_candidates),
            timeout: seconds(file.linker.timeout_secs, 10, "linker.timeout_secs")?,
            retries: file.linker.retries.unwrap_or(defaults.retries),
            backoff: defaults.backoff,
            rules: file.linker.rules.unwrap_or_else(default_rules),
        };

        let graph = flags.graph.clone().or(file.endpoint.graph);
        let endpoint_url = flags
            .endpoint
            .clone()
            .or(file.endpoint.url)
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());

        let pipeline = PipelineConfig {
            k_templates: flags.k_templates.or(file.pipeline.k_templates).unwrap_or(3),
            max_combinations_per_template: flags
                .max_combinations
                .or(file.pipeline.max_combinations_per_template)
                .unwrap_or(10),
            prune_unused_entities: flags.prune_unused || file.pipeline.prune_unused_entities.unwrap_or(false),
        };

        Ok(Self {
            templates: flags.templates.clone().or(file.templates),
            train: flags.train.clone().or(file.train),
            relations: flags.relations.clone().or(file.relations),
            offline,
            backend,
            server_url: flags
                .server_url
                .clone()
                .or(file.translator.server_url)
                .unwrap_or_else(|| DEFAULT_MODEL_SERVER.to_string()),
            num_beams: flags.num_beams.or(file.translator.num_beams).unwrap_or(1),
            translator_timeout: seconds(file.translator.timeout_secs, 30, "translator.timeout_secs")?,
            linker,
            graph,
            endpoint_url,
            endpoint_timeout: seconds(file.endpoint.timeout_secs, 15, "endpoint.timeout_secs")?,
            endpoint_retries: file.endpoint.retries.unwrap_or(2),
            max_in_flight: file.endpoint.max_in_flight.unwrap_or(4),
            pipeline,
            jobs: file.pipeline.jobs,
        })
    }
}
