use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::linking::EntityType;
use crate::translator::Backend;

#[derive(Debug, Parser)]
#[command(name = "dblp-kgqa", version, about = "Question answering over the DBLP knowledge graph")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more detail (-v prints the per-step trace).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the template base from a training dataset.
    BuildTemplates(BuildArgs),
    /// Answer one question, or questions read from standard input.
    Ask(AskArgs),
    /// Answer a questions file and write both submission files.
    Batch(BatchArgs),
    /// Score submission files against a gold dataset.
    Eval(EvalArgs),
    /// Link a single mention.
    Link(LinkArgs),
    /// Print the special-token vocabulary for the translation model.
    Vocab(VocabArgs),
    /// Serve a local graph as a SPARQL endpoint.
    MockEndpoint(MockArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Baseline,
    Neural,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Baseline => Backend::Baseline,
            BackendArg::Neural => Backend::Neural,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TypeArg {
    Author,
    Publication,
    Venue,
}

impl From<TypeArg> for EntityType {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::Author => EntityType::Author,
            TypeArg::Publication => EntityType::Publication,
            TypeArg::Venue => EntityType::Venue,
        }
    }
}

/// Options shared by every command that runs the pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Template base file written by `build-templates`.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Training dataset (baseline translator index; also builds the base
    /// when --templates is absent).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Relation list, one IRI per line.
    #[arg(long)]
    pub relations: Option<PathBuf>,
    /// Use fixtures and a local graph only; opens no network connections.
    #[arg(long)]
    pub offline: bool,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Model server root for the neural backend.
    #[arg(long)]
    pub server_url: Option<String>,
    #[arg(long)]
    pub num_beams: Option<u32>,
    /// Remote SPARQL endpoint URL.
    #[arg(long, conflicts_with = "graph")]
    pub endpoint: Option<String>,
    /// Local N-Triples graph to answer from.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Directory of recorded search responses (implies offline linking).
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Write-through cache file for live linking.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub api_base_url: Option<String>,
    #[arg(long)]
    pub requests_per_second: Option<f64>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
    #[arg(long)]
    pub k_templates: Option<usize>,
    #[arg(long)]
    pub max_combinations: Option<usize>,
    /// Report only entities used by the chosen query.
    #[arg(long)]
    pub prune_unused: bool,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub relations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[arg(long, required_unless_present = "repl", conflicts_with = "repl")]
    pub question: Option<String>,
    /// Read one question per line until end of input.
    #[arg(long)]
    pub repl: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub questions: PathBuf,
    #[arg(long)]
    pub out_answers: PathBuf,
    #[arg(long)]
    pub out_entities: PathBuf,
    /// Full per-question traces as JSON.
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    /// Keep answers already present in --out-answers and skip those ids.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred_answers: PathBuf,
    #[arg(long)]
    pub pred_entities: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// JSON report with per-question scores.
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long)]
    pub mention: String,
    #[arg(long = "type", value_enum, default_value = "author")]
    pub entity_type: TypeArg,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    #[arg(long)]
    pub relations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MockArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 0)]
    pub port: u16,
}
