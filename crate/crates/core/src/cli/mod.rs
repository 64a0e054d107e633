//! The `kpe` command line: config handling and one function per command.
//!
//! Every command has a library entry point returning an outcome struct so
//! tests can drive it without spawning a process. [`run`] parses arguments,
//! dispatches, prints, and maps failures to exit codes:
//!
//! - 0: success
//! - 1: configuration, IO or input errors
//! - 2: the run finished but its error rate exceeded the threshold

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::net::{TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{align_tokens, greedy_alignment, render_heatmap, tokenize, AlignError};
use crate::backend::{Counted, DiskCache, GenParams, HttpConfig, HttpProvider, MockFixtures, MockProvider, Provider, RetryPolicy};
use crate::chains::{ChainError, Estimator, EstimatorKind, ScoreSummary, Scorer, StepFailurePolicy};
use crate::corpus::{CorpusError, EvalDataset, LanguagePair};
use crate::parsing::DropPolicy;
use crate::prompting::{PromptError, ScoringMode, TemplateRegistry};

pub use report::{cmd_report, Report, ReportInputs};

/// Name of the only environment variable read for credentials.
pub const API_KEY_ENV: &str = "KPE_API_KEY";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("{0}")]
    Input(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    Mock,
}

/// Settings for `score` and `align`. Loaded from a JSON document; every key
/// can be overridden by the matching flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub provider: ProviderKind,
    pub endpoint_url: Option<String>,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub cache_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub scoring_mode: ScoringMode,
    pub estimators: Vec<EstimatorKind>,
    pub drop_policy: DropPolicy,
    pub step_failure: StepFailurePolicy,
    pub segments: Option<PathBuf>,
    pub outputs: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
    pub human_scores: Option<PathBuf>,
    pub mock_fixtures: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub error_threshold: f64,
    pub retry_base_ms: u64,
    pub retry_max_attempts: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Http,
            endpoint_url: None,
            model_id: "gpt-4".into(),
            temperature: 0.0,
            max_tokens: 256,
            timeout_secs: 60,
            cache_dir: None,
            max_in_flight: 4,
            scoring_mode: ScoringMode::Cat5,
            estimators: vec![
                EstimatorKind::Prompt1Perplexity,
                EstimatorKind::Prompt2Token,
                EstimatorKind::Prompt3Sentence,
                EstimatorKind::Cot1,
                EstimatorKind::Cot2,
            ],
            drop_policy: DropPolicy::Drop,
            step_failure: StepFailurePolicy::AbortPair,
            segments: None,
            outputs: None,
            judgments: None,
            human_scores: None,
            mock_fixtures: None,
            templates_dir: None,
            error_threshold: 0.01,
            retry_base_ms: 1000,
            retry_max_attempts: 5,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            stop: None,
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            base_delay: Duration::from_millis(self.retry_base_ms),
            factor: 2.0,
            max_attempts: self.retry_max_attempts.max(1),
        }
    }

    pub fn registry(&self) -> Result<TemplateRegistry, CliError> {
        Ok(match &self.templates_dir {
            Some(dir) => TemplateRegistry::with_overrides(dir)?,
            None => TemplateRegistry::builtin(),
        })
    }

    fn data_paths(&self) -> Result<(&Path, &Path, Option<&Path>), CliError> {
        fn need<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path, CliError> {
            p.as_deref()
                .ok_or_else(|| CliError::Config(format!("`{name}` is required")))
        }
        Ok((need(&self.segments, "segments")?, need(&self.outputs, "outputs")?, self.judgments.as_deref()))
    }

    /// Checks the invariants that must hold before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.max_in_flight < 1 {
            return Err(CliError::Config("max_in_flight must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.error_threshold) {
            return Err(CliError::Config("error_threshold must be within [0, 1]".into()));
        }
        let paths = [
            ("segments", &self.segments),
            ("outputs", &self.outputs),
            ("judgments", &self.judgments),
            ("human_scores", &self.human_scores),
            ("mock_fixtures", &self.mock_fixtures),
            ("templates_dir", &self.templates_dir),
        ];
        for (name, p) in paths {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(CliError::Config(format!("{name} path {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Flags shared by `score` and `align`; each overrides the config key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON config document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub provider: Option<ProviderKind>,
    #[arg(long)]
    pub endpoint_url: Option<String>,
    #[arg(long)]
    pub model_id: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// cat5, cat3, stars or scalar.
    #[arg(long = "mode", alias = "scoring-mode")]
    pub scoring_mode: Option<ScoringMode>,
    /// Comma-separated: gemba, prompt1, prompt2, prompt3, cot1, cot2.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<EstimatorKind>>,
    /// drop or middle.
    #[arg(long)]
    pub drop_policy: Option<DropPolicy>,
    /// abort_pair or substitute_middle.
    #[arg(long)]
    pub step_failure: Option<StepFailurePolicy>,
    #[arg(long)]
    pub segments: Option<PathBuf>,
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    #[arg(long)]
    pub human_scores: Option<PathBuf>,
    #[arg(long)]
    pub mock_fixtures: Option<PathBuf>,
    #[arg(long)]
    pub templates_dir: Option<PathBuf>,
    #[arg(long)]
    pub error_threshold: Option<f64>,
    #[arg(long)]
    pub retry_base_ms: Option<u64>,
    #[arg(long)]
    pub retry_max_attempts: Option<u32>,
}

impl ConfigFlags {
    /// Loads `--config` if given, then applies every flag that was set.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        macro_rules! apply_opt {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = Some(v.clone());
                }
            )*};
        }
        apply!(
            provider,
            model_id,
            temperature,
            max_tokens,
            timeout_secs,
            max_in_flight,
            scoring_mode,
            estimators,
            drop_policy,
            step_failure,
            error_threshold,
            retry_base_ms,
            retry_max_attempts
        );
        apply_opt!(
            endpoint_url,
            cache_dir,
            segments,
            outputs,
            judgments,
            human_scores,
            mock_fixtures,
            templates_dir
        );
        c.validate()?;
        Ok(c)
    }
}

/// Builds the configured provider. The HTTP provider needs the API key in
/// the environment and an endpoint that accepts TCP connections.
pub fn build_provider(config: &RunConfig) -> Result<Box<dyn Provider>, CliError> {
    match config.provider {
        ProviderKind::Mock => {
            let fixtures = match &config.mock_fixtures {
                Some(p) => MockFixtures::load(p)?,
                None => MockFixtures::default(),
            };
            Ok(Box::new(MockProvider::new(fixtures)))
        }
        ProviderKind::Http => {
            let endpoint_url = config
                .endpoint_url
                .clone()
                .ok_or_else(|| CliError::Config("endpoint_url is required for the http provider".into()))?;
            let api_key = std::env::var(API_KEY_ENV)
                .map_err(|_| CliError::Config(format!("{API_KEY_ENV} is not set")))?;
            let timeout = Duration::from_secs(config.timeout_secs.max(1));
            preflight(&endpoint_url, timeout.min(Duration::from_secs(5)))?;
            Ok(Box::new(HttpProvider::new(HttpConfig {
                endpoint_url,
                api_key,
                timeout,
            })))
        }
    }
}

/// Fails fast when nothing listens at the endpoint.
fn preflight(endpoint_url: &str, timeout: Duration) -> Result<(), CliError> {
    let uri: ureq::http::Uri = endpoint_url
        .parse()
        .map_err(|e| CliError::Config(format!("invalid endpoint_url `{endpoint_url}`: {e}")))?;
    let host = uri
        .host()
        .ok_or_else(|| CliError::Config(format!("endpoint_url `{endpoint_url}` has no host")))?;
    let port = uri
        .port_u16()
        .unwrap_or(if uri.scheme_str() == Some("https") { 443 } else { 80 });
    let addrs: Vec<_> = (host, port)
        .to_socket_addrs()
        .map_err(|e| CliError::Unreachable(format!("{host}:{port}: {e}")))?
        .collect();
    let mut last = None;
    for addr in &addrs {
        match TcpStream::connect_timeout(addr, timeout) {
            Ok(_) => return Ok(()),
            Err(e) => last = Some(e),
        }
    }
    Err(CliError::Unreachable(format!(
        "{host}:{port}: {}",
        last.map(|e| e.to_string()).unwrap_or_else(|| "no addresses".into())
    )))
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Listing of the registry, one line (or JSON object) per template.
pub fn cmd_templates_list(registry: &TemplateRegistry, json: bool) -> String {
    let mut out = String::new();
    for t in registry.iter() {
        if json {
            let obj = serde_json::json!({
                "template_id": t.template_id,
                "version": t.version,
                "family": t.family,
                "mode": t.mode,
                "placeholders": t.placeholder_names().collect::<Vec<_>>(),
                "response_schema": t.response_schema,
            });
            out.push_str(&obj.to_string());
        } else {
            out.push_str(&format!(
                "{}\tv{}\t{}\t{}",
                t.template_id,
                t.version,
                t.response_schema,
                t.placeholder_names().collect::<Vec<_>>().join(",")
            ));
        }
        out.push('\n');
    }
    out
}

/// Metadata written next to the score files as `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model_id: String,
    pub provider: String,
    pub scoring_mode: ScoringMode,
    pub estimators: Vec<EstimatorKind>,
    pub templates: Vec<(String, u32)>,
    pub summaries: Vec<(EstimatorKind, ScoreSummary)>,
    pub provider_calls: u64,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub files: Vec<PathBuf>,
    pub summaries: Vec<(EstimatorKind, ScoreSummary)>,
    pub provider_calls: u64,
    pub error_rate: f64,
    pub exit_code: i32,
}

pub fn score_file_name(kind: EstimatorKind) -> String {
    format!("scores_{kind}.jsonl")
}

/// Scores the configured dataset with every configured estimator and writes
/// `scores_<estimator>.jsonl` plus `run.json` into `out_dir`.
pub fn cmd_score(config: &RunConfig, provider: &dyn Provider, out_dir: &Path) -> Result<ScoreOutcome, CliError> {
    let (seg, out, judg) = config.data_paths()?;
    let dataset = match judg {
        Some(j) => EvalDataset::load(seg, out, j)?,
        None => EvalDataset::assemble(
            crate::corpus::load_segments(seg, crate::corpus::DataFormat::from_path(seg))?,
            crate::corpus::load_system_outputs(out, crate::corpus::DataFormat::from_path(out))?,
            Vec::new(),
        )?,
    };
    if config.estimators.is_empty() {
        return Err(CliError::Config("no estimators selected".into()));
    }
    let estimators = config
        .estimators
        .iter()
        .map(|&k| Estimator::new(k, config.scoring_mode))
        .collect::<Result<Vec<_>, _>>()?;
    let registry = config.registry()?;
    let cache = match &config.cache_dir {
        Some(dir) => Some(DiskCache::open(dir).map_err(io_err(dir))?),
        None => None,
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let counted = Counted::new(provider);
    let mut scorer = Scorer::new(&registry, &counted, config.gen_params());
    scorer.cache = cache.as_ref();
    scorer.retry = config.retry();
    scorer.max_in_flight = config.max_in_flight;
    scorer.step_failure = config.step_failure;

    let mut files = Vec::new();
    let mut summaries = Vec::new();
    let mut templates = std::collections::BTreeSet::new();
    let pairs = crate::chains::dataset_pairs(&dataset);
    for estimator in estimators {
        log::info!("scoring {} pairs with {} ({})", pairs.len(), estimator.kind, estimator.mode);
        let before = counted.calls();
        let table = crate::chains::ScoreTable::from_scores(estimator, scorer.score_pairs(estimator, &pairs)?);
        for q in table.scores.values() {
            for s in &q.steps {
                templates.insert((s.template_id.clone(), s.version));
            }
        }
        let path = out_dir.join(score_file_name(estimator.kind));
        table.write_jsonl(&path).map_err(io_err(&path))?;
        let s = table.summary;
        log::info!(
            "{}: {} parsed, {} dropped, {} errored, {} provider calls",
            estimator.kind,
            s.parsed,
            s.dropped,
            s.errored,
            counted.calls() - before
        );
        files.push(path);
        summaries.push((estimator.kind, s));
    }
    let provider_calls = counted.calls();
    log::info!("provider calls: {provider_calls}");

    let (bad, total) = summaries
        .iter()
        .fold((0, 0), |(b, t), (_, s)| (b + s.dropped + s.errored, t + s.total()));
    let error_rate = if total == 0 { 0.0 } else { bad as f64 / total as f64 };
    let meta = RunMetadata {
        model_id: config.model_id.clone(),
        provider: provider.id().to_string(),
        scoring_mode: config.scoring_mode,
        estimators: config.estimators.clone(),
        templates: templates.into_iter().collect(),
        summaries: summaries.clone(),
        provider_calls,
        created_at: unix_now(),
    };
    let meta_path = out_dir.join("run.json");
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;

    let exit_code = if error_rate > config.error_threshold {
        log::error!(
            "error rate {:.2}% exceeds threshold {:.2}%",
            error_rate * 100.0,
            config.error_threshold * 100.0
        );
        2
    } else {
        0
    };
    Ok(ScoreOutcome {
        files,
        summaries,
        provider_calls,
        error_rate,
        exit_code,
    })
}

/// Sidecar JSON written next to each heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub lp: LanguagePair,
    pub system_id: String,
    pub seg_id: String,
    pub src_tokens: Vec<String>,
    pub mt_tokens: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub clamped: usize,
    /// `(src_index, mt_index, score)` per translation token.
    pub greedy: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignCmdOutcome {
    pub files: Vec<PathBuf>,
    pub provider_calls: u64,
}

/// Aligns `(src, mt)` for each listed segment of one system and writes
/// `<lp>_<system>_<seg>.svg` and `.json` into `out_dir`.
pub fn cmd_align(
    config: &RunConfig,
    provider: &dyn Provider,
    lp: &LanguagePair,
    system_id: &str,
    seg_ids: &[String],
    out_dir: &Path,
) -> Result<AlignCmdOutcome, CliError> {
    let (seg, out, _) = config.data_paths()?;
    let segments = crate::corpus::load_segments(seg, crate::corpus::DataFormat::from_path(seg))?;
    let outputs = crate::corpus::load_system_outputs(out, crate::corpus::DataFormat::from_path(out))?;
    let dataset = EvalDataset::assemble(segments, outputs, Vec::new())?;
    let mut jobs = Vec::with_capacity(seg_ids.len());
    for id in seg_ids {
        let src = dataset
            .segment(lp, id)
            .ok_or_else(|| CliError::Input(format!("unknown segment `{id}` for {lp}")))?;
        let mt = dataset
            .output(lp, system_id, id)
            .ok_or_else(|| CliError::Input(format!("no output of system `{system_id}` for segment `{id}` ({lp})")))?;
        jobs.push((id, tokenize(&src.src_text)?, tokenize(&mt.mt_text)?));
    }
    let registry = config.registry()?;
    let cache = match &config.cache_dir {
        Some(dir) => Some(DiskCache::open(dir).map_err(io_err(dir))?),
        None => None,
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let counted = Counted::new(provider);
    let params = config.gen_params();
    let retry = config.retry();
    let mut files = Vec::new();
    for (id, src, mt) in jobs {
        let outcome = align_tokens(&src, &mt, &registry, &counted, cache.as_ref(), &params, &retry)?;
        let svg = render_heatmap(&outcome.matrix)?;
        let stem = format!("{lp}_{system_id}_{id}");
        let svg_path = out_dir.join(format!("{stem}.svg"));
        fs::write(&svg_path, svg).map_err(io_err(&svg_path))?;
        let record = AlignmentRecord {
            lp: lp.clone(),
            system_id: system_id.to_string(),
            seg_id: id.clone(),
            src_tokens: src.as_slice().to_vec(),
            mt_tokens: mt.as_slice().to_vec(),
            cells: outcome.matrix.cells().to_vec(),
            clamped: outcome.clamped,
            greedy: greedy_alignment(&outcome.matrix),
        };
        let json_path = out_dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&record).expect("record serializes");
        fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
        files.push(svg_path);
        files.push(json_path);
    }
    Ok(AlignCmdOutcome {
        files,
        provider_calls: counted.calls(),
    })
}

/// Removes cache entries older than `max_age`; returns how many.
pub fn cmd_cache_gc(cache_dir: &Path, max_age: Duration, now: SystemTime) -> Result<usize, CliError> {
    if !cache_dir.is_dir() {
        return Err(CliError::Config(format!("cache dir {} does not exist", cache_dir.display())));
    }
    let cache = DiskCache::open(cache_dir).map_err(io_err(cache_dir))?;
    cache.gc(max_age, now).map_err(io_err(cache_dir))
}

/// `90`, `90s`, `15m`, `12h` or `30d`.
pub fn parse_age(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let n: u64 = num.parse().map_err(|_| format!("invalid age `{s}`"))?;
    let mult = match unit {
        "" | "s" => 1,
        "m" => 60,
        "h" => 3600,
        "d" => 86_400,
        _ => return Err(format!("invalid age unit in `{s}` (use s, m, h or d)")),
    };
    Ok(Duration::from_secs(n * mult))
}

#[derive(Debug, Parser)]
#[command(name = "kpe", version, about = "Knowledge-prompted MT quality estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the prompt templates.
    Templates {
        #[arg(long)]
        json: bool,
        #[arg(long)]
        templates_dir: Option<PathBuf>,
    },
    /// Score every system output with the configured estimators.
    Score {
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long)]
        out: PathBuf,
        /// Print the outcome as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Kendall tau table (and pairwise accuracy) from score files.
    Report {
        /// Score files, or directories holding `scores_*.jsonl`.
        #[arg(long = "scores", required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        human_scores: Option<PathBuf>,
        #[arg(long, default_value = "drop")]
        drop_policy: DropPolicy,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Token alignment heatmaps for selected segments.
    Align {
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long)]
        lp: LanguagePair,
        #[arg(long)]
        system: String,
        #[arg(long = "seg", required = true, num_args = 1.., value_delimiter = ',')]
        seg_ids: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cache maintenance.
    Cache {
        #[command(subcommand)]
        command: CacheCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheCommand {
    /// Delete entries older than `--max-age`.
    Gc {
        #[arg(long)]
        cache_dir: PathBuf,
        #[arg(long, value_parser = parse_age)]
        max_age: Duration,
    },
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Templates { json, templates_dir } => {
            let registry = match templates_dir {
                Some(d) => TemplateRegistry::with_overrides(&d)?,
                None => TemplateRegistry::builtin(),
            };
            print!("{}", cmd_templates_list(&registry, json));
            Ok(0)
        }
        Command::Score { config, out, json } => {
            let config = config.resolve()?;
            let provider = build_provider(&config)?;
            let outcome = cmd_score(&config, provider.as_ref(), &out)?;
            if json {
                let v = serde_json::json!({
                    "files": outcome.files,
                    "summaries": outcome.summaries,
                    "provider_calls": outcome.provider_calls,
                    "error_rate": outcome.error_rate,
                });
                println!("{v}");
            } else {
                for f in &outcome.files {
                    println!("{}", f.display());
                }
            }
            Ok(outcome.exit_code)
        }
        Command::Report {
            scores,
            judgments,
            human_scores,
            drop_policy,
            out,
            json,
        } => {
            let inputs = ReportInputs {
                score_paths: scores,
                judgments,
                human_scores,
                drop_policy,
                generated_at: unix_now(),
            };
            let report = cmd_report(&inputs)?;
            let written = report.write(&out)?;
            if json {
                println!("{}", serde_json::to_string(&report).expect("report serializes"));
            } else {
                for f in written {
                    println!("{}", f.display());
                }
            }
            Ok(0)
        }
        Command::Align {
            config,
            lp,
            system,
            seg_ids,
            out,
        } => {
            let config = config.resolve()?;
            let provider = build_provider(&config)?;
            let outcome = cmd_align(&config, provider.as_ref(), &lp, &system, &seg_ids, &out)?;
            for f in &outcome.files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Cache {
            command: CacheCommand::Gc { cache_dir, max_age },
        } => {
            let removed = cmd_cache_gc(&cache_dir, max_age, SystemTime::now())?;
            println!("{removed}");
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
