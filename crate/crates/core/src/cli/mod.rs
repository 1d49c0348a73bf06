//! The `dblp-kgqa` command line. [`run`] is the whole program minus
//! logger setup, so it can be driven in-process by tests.

mod args;
mod config;

pub use args::{AskArgs, BatchArgs, BuildArgs, Cli, Command, EvalArgs, LinkArgs, MockArgs, RunArgs, VocabArgs};
pub use config::{AnswerSource, FileConfig, Settings, DEFAULT_ENDPOINT};

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use clap::Parser;
use log::warn;
use thiserror::Error;

use crate::endpoint::{Graph, LocalGraph, MockBehavior, MockEndpoint, QueryExecutor, RemoteConfig, RemoteEndpoint};
use crate::eval::{
    evaluate_run, load_dataset, read_answers_file, read_entities_file, render_report, to_pretty,
    AnswerEntry, Answers, EntityEntry, GoldRecord,
};
use crate::fsutil::write_atomic;
use crate::linking::{EntityType, Linker};
use crate::pipeline::{parse_questions, BatchInput, Outcome, Pipeline, QAResult, Status};
use crate::sparql::{special_token_vocabulary, Vocabulary};
use crate::templates::TemplateBase;
use crate::translator::{Backend, BaselineTranslator, NeuralTranslator, Translator};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    /// Bad flags, configuration or input files; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while doing the work; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

type CliResult = Result<(), CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; errors go to standard error.
pub fn run<I, T>(args: I, out: &mut dyn Write, input: &mut dyn BufRead) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    2
                }
            };
        }
    };
    match execute(cli, out, input) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, input: &mut dyn BufRead) -> CliResult {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let verbose = cli.verbose;
    match cli.command {
        Command::BuildTemplates(a) => cmd_build_templates(&a, out),
        Command::Ask(a) => cmd_ask(&a, file, verbose, out, input),
        Command::Batch(a) => cmd_batch(&a, file, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Link(a) => cmd_link(&a, file, out),
        Command::Vocab(a) => cmd_vocab(&a, out),
        Command::MockEndpoint(a) => cmd_mock_endpoint(&a, out),
    }
}

fn load_vocab(relations: Option<&Path>) -> Result<Vocabulary, CliError> {
    match relations {
        Some(p) => Vocabulary::load(p).map_err(|e| usage(format!("relations {}: {e}", p.display()))),
        None => Ok(Vocabulary::dblp_default()),
    }
}

fn load_training(path: &Path) -> Result<Vec<GoldRecord>, CliError> {
    load_dataset(path).map_err(usage)
}

/// Question and paraphrases paired with the gold query.
fn training_pairs(records: &[GoldRecord]) -> Vec<(String, String)> {
    records
        .iter()
        .filter_map(|r| r.gold_query.as_ref().map(|q| (r, q)))
        .flat_map(|(r, q)| {
            std::iter::once(r.question.clone())
                .chain(r.paraphrases.iter().cloned())
                .map(move |question| (question, q.clone()))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    write_atomic(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_build_templates(a: &BuildArgs, out: &mut dyn Write) -> CliResult {
    let vocab = load_vocab(a.relations.as_deref())?;
    let records = load_training(&a.train)?;
    let with_query: Vec<(&str, &str)> = records
        .iter()
        .filter_map(|r| r.gold_query.as_deref().map(|q| (r.id.as_str(), q)))
        .collect();
    let (base, skipped) = TemplateBase::build(with_query.iter().copied(), &vocab);
    for s in &skipped {
        warn!("skipped {}: {}", s.id, s.error);
    }
    if base.is_empty() {
        eprintln!("warning: no templates built from {}", a.train.display());
    }
    base.save(&a.out).map_err(|e| runtime(format!("{}: {e}", a.out.display())))?;
    writeln!(
        out,
        "{} templates from {} queries ({} skipped, {} records without a query) written to {}",
        base.len(),
        with_query.len(),
        skipped.len(),
        records.len() - with_query.len(),
        a.out.display()
    )
    .map_err(runtime)
}

/// Assembles a pipeline from resolved settings. Nothing here opens a
/// network connection.
pub fn build_pipeline(settings: &Settings) -> Result<Pipeline, CliError> {
    let vocab = load_vocab(settings.relations.as_deref())?;
    let training = settings.train.as_deref().map(load_training).transpose()?;
    let base = match (&settings.templates, &training) {
        (Some(p), _) => TemplateBase::load(p, Some(&vocab)).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        (None, Some(records)) => {
            let with_query = records.iter().filter_map(|r| r.gold_query.as_deref().map(|q| (r.id.as_str(), q)));
            TemplateBase::build(with_query, &vocab).0
        }
        (None, None) => return Err(usage("a template base is needed: pass --templates or --train")),
    };
    let translator: Arc<dyn Translator> = match settings.backend {
        Backend::Baseline => {
            let records = training
                .as_ref()
                .ok_or_else(|| usage("the baseline translator needs --train"))?;
            let (t, skipped) = BaselineTranslator::build(training_pairs(records), &base, &vocab);
            if skipped > 0 {
                warn!("{skipped} training queries did not parse and are not indexed");
            }
            Arc::new(t)
        }
        Backend::Neural => Arc::new(NeuralTranslator::new(
            &settings.server_url,
            settings.num_beams,
            settings.translator_timeout,
        )),
    };
    let linker = Linker::new(settings.linker.clone()).map_err(usage)?;
    let executor: Arc<dyn QueryExecutor> = match settings.answer_source()? {
        AnswerSource::Local { graph } => Arc::new(LocalGraph(
            Graph::load(&graph).map_err(|e| usage(format!("{}: {e}", graph.display())))?,
        )),
        AnswerSource::Remote { url } => {
            let mut config = RemoteConfig::new(url);
            config.timeout = settings.endpoint_timeout;
            config.retries = settings.endpoint_retries;
            config.max_in_flight = settings.max_in_flight;
            Arc::new(RemoteEndpoint::new(config))
        }
    };
    Pipeline::new(
        translator,
        Arc::new(linker),
        Arc::new(base),
        executor,
        vocab,
        settings.pipeline.clone(),
    )
    .map_err(usage)
}

fn format_answers(answers: &Answers) -> Vec<String> {
    match answers {
        Answers::Boolean(b) => vec![b.to_string()],
        Answers::Values(v) if v.is_empty() => vec!["(empty result)".to_string()],
        Answers::Values(v) => v.iter().cloned().collect(),
    }
}

/// The four-step trace of one question.
pub fn write_trace(out: &mut dyn Write, r: &QAResult) -> std::io::Result<()> {
    for (i, form) in r.forms.iter().enumerate() {
        let label = if i == 0 { "primary".to_string() } else { format!("beam {}", i + 1) };
        writeln!(out, "Step I   logical form ({label}): {}", form.logical_form)?;
        if !form.parsed {
            writeln!(out, "         (does not parse; retrieval used the raw text)")?;
        }
        for m in &form.mentions {
            let candidates: Vec<String> = m.candidates.iter().map(|c| format!("{}. {}", c.rank, c.iri)).collect();
            match &m.error {
                Some(e) => writeln!(out, "Step II  <{}> ({:?}): {e}", m.surface, m.entity_type)?,
                None => writeln!(out, "Step II  <{}> ({:?}): {}", m.surface, m.entity_type, candidates.join("  "))?,
            }
        }
        for t in &form.templates {
            writeln!(out, "Step III {}. ({:.4}) {}", t.rank, t.score, t.template)?;
        }
        if let Some(e) = &form.error {
            writeln!(out, "         {e}")?;
        }
        for q in r.tried_queries.iter().filter(|q| q.form == i) {
            let outcome = match &q.outcome {
                Outcome::Accepted => "accepted".to_string(),
                Outcome::Rejected => "rejected".to_string(),
                Outcome::Failed(e) => format!("failed: {e}"),
            };
            writeln!(out, "Step IV  [{outcome}] {}", q.query)?;
        }
    }
    if r.fallback_used {
        writeln!(out, "         no candidate returned an answer; using the first executed query")?;
    }
    Ok(())
}

fn print_result(out: &mut dyn Write, r: &QAResult, verbose: u8) -> std::io::Result<()> {
    if verbose > 0 {
        write_trace(out, r)?;
    }
    match (&r.status, &r.answers) {
        (Status::Answered, Some(a)) => {
            for line in format_answers(a) {
                writeln!(out, "{line}")?;
            }
        }
        (Status::Error, _) => writeln!(out, "error: {}", r.message.as_deref().unwrap_or("unknown"))?,
        _ => writeln!(out, "no answer: {}", r.message.as_deref().unwrap_or("no candidate query"))?,
    }
    Ok(())
}

fn cmd_ask(a: &AskArgs, file: FileConfig, verbose: u8, out: &mut dyn Write, input: &mut dyn BufRead) -> CliResult {
    let settings = Settings::resolve(&a.run, file)?;
    let pipeline = build_pipeline(&settings)?;
    if let Some(q) = &a.question {
        let r = pipeline.answer("ask", q);
        return print_result(out, &r, verbose).map_err(runtime);
    }
    let mut n = 0;
    loop {
        write!(out, "> ").and_then(|_| out.flush()).map_err(runtime)?;
        let mut line = String::new();
        if input.read_line(&mut line).map_err(runtime)? == 0 {
            writeln!(out).map_err(runtime)?;
            return Ok(());
        }
        let q = line.trim();
        if q.is_empty() {
            continue;
        }
        n += 1;
        let r = pipeline.answer(&format!("repl-{n}"), q);
        print_result(out, &r, verbose).map_err(runtime)?;
    }
}

fn cmd_batch(a: &BatchArgs, file: FileConfig, out: &mut dyn Write) -> CliResult {
    let settings = Settings::resolve(&a.run, file)?;
    let text = std::fs::read_to_string(&a.questions).map_err(|e| usage(format!("{}: {e}", a.questions.display())))?;
    let inputs = parse_questions(&text, &a.questions.display().to_string()).map_err(usage)?;

    let mut previous_answers: BTreeMap<String, AnswerEntry> = BTreeMap::new();
    let mut previous_entities: BTreeMap<String, EntityEntry> = BTreeMap::new();
    if a.resume && a.out_answers.exists() {
        for e in read_answers_file(&a.out_answers).map_err(usage)? {
            previous_answers.insert(e.id.clone(), e);
        }
        if a.out_entities.exists() {
            for e in read_entities_file(&a.out_entities).map_err(usage)? {
                previous_entities.insert(e.id.clone(), e);
            }
        }
    }
    let todo: Vec<BatchInput> = inputs
        .iter()
        .filter(|i| !previous_answers.contains_key(&i.id))
        .cloned()
        .collect();

    let pipeline = build_pipeline(&settings)?;
    let jobs = a.jobs.or(settings.jobs);
    let output = match jobs {
        Some(0) => return Err(usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime)?
            .install(|| pipeline.batch(&todo)),
        None => pipeline.batch(&todo),
    };

    let mut fresh_answers: BTreeMap<String, AnswerEntry> =
        output.answer_entries().into_iter().map(|e| (e.id.clone(), e)).collect();
    let mut fresh_entities: BTreeMap<String, EntityEntry> =
        output.entity_entries().into_iter().map(|e| (e.id.clone(), e)).collect();
    let mut answers = Vec::new();
    let mut entities = Vec::new();
    let mut seen = BTreeSet::new();
    for input in &inputs {
        if !seen.insert(input.id.clone()) {
            continue;
        }
        if let Some(e) = fresh_answers.remove(&input.id).or_else(|| previous_answers.remove(&input.id)) {
            answers.push(e);
        }
        let entity = fresh_entities
            .remove(&input.id)
            .or_else(|| previous_entities.remove(&input.id))
            .unwrap_or(EntityEntry {
                id: input.id.clone(),
                entities: Vec::new(),
            });
        entities.push(entity);
    }
    write_file(&a.out_answers, &to_pretty(&crate::eval::answers_to_json(&answers)))?;
    write_file(&a.out_entities, &to_pretty(&entities))?;
    if let Some(p) = &a.out_trace {
        write_file(p, &to_pretty(&output.results))?;
    }
    writeln!(
        out,
        "{} questions: {} answered, {} without answer, {} errors, {} kept from a previous run",
        inputs.len(),
        output.count(Status::Answered),
        output.count(Status::NoAnswer),
        output.count(Status::Error),
        inputs.len() - todo.len()
    )
    .map_err(runtime)
}

/// Scores two submission files; the printed text is [`render_report`].
pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let answers = read_answers_file(&a.pred_answers).map_err(usage)?;
    let entities = read_entities_file(&a.pred_entities).map_err(usage)?;
    let gold = load_dataset(&a.gold).map_err(usage)?;
    let report = evaluate_run(&answers, &entities, &gold).map_err(usage)?;
    if let Some(p) = &a.out_report {
        write_file(p, &to_pretty(&report))?;
    }
    write!(out, "{}", render_report(&report)).map_err(runtime)
}

fn cmd_link(a: &LinkArgs, file: FileConfig, out: &mut dyn Write) -> CliResult {
    let settings = Settings::resolve(&a.run, file)?;
    let linker = Linker::new(settings.linker).map_err(usage)?;
    let entity_type: EntityType = a.entity_type.into();
    match linker.link_typed(&a.mention, entity_type) {
        Ok(candidates) => {
            for c in candidates {
                writeln!(out, "{}\t{}\t{}", c.rank, c.iri, c.label).map_err(runtime)?;
            }
            Ok(())
        }
        Err(e) => Err(runtime(e)),
    }
}

fn cmd_vocab(a: &VocabArgs, out: &mut dyn Write) -> CliResult {
    let vocab = load_vocab(a.relations.as_deref())?;
    let tokens = special_token_vocabulary(vocab.relations()).map_err(usage)?;
    for t in tokens {
        writeln!(out, "{t}").map_err(runtime)?;
    }
    Ok(())
}

fn cmd_mock_endpoint(a: &MockArgs, out: &mut dyn Write) -> CliResult {
    let graph = Graph::load(&a.graph).map_err(|e| usage(format!("{}: {e}", a.graph.display())))?;
    let triples = graph.len();
    let server = MockEndpoint::bind(&format!("{}:{}", a.host, a.port), MockBehavior::Serve(graph)).map_err(runtime)?;
    writeln!(out, "serving {triples} triples at {}", server.url())
        .and_then(|_| out.flush())
        .map_err(runtime)?;
    server.wait();
    Ok(())
}
