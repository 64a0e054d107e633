//! One-step and chain-of-thought estimators over `(src, mt)` pairs.
//!
//! One-step estimators render a single template and parse its answer. The
//! chain estimators run the perplexity and token-similarity steps (plus
//! sentence similarity for `cot2`), then bind the parsed class labels of those
//! steps into a combining prompt whose answer is the final score.
//!
//! Dataset scoring is stage-synchronous: every pair's first step is sent as
//! one batch, then every pair's second step, and so on, with the combining
//! prompts last.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{run_batch, BatchError, CompletionRequest, DiskCache, GenParams, Provider, RetryPolicy};
use crate::corpus::{EvalDataset, LanguagePair, OutputKey};
use crate::parsing::{parse_response, ParsedResponse};
use crate::prompting::{render_template, PromptError, PromptTemplate, ScoringMode, TemplateRegistry};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("estimator {kind} cannot run in {mode} mode: chain steps need a categorical scale")]
    UnsupportedMode { kind: EstimatorKind, mode: ScoringMode },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error("score file {path}: {message}")]
    ScoreFile { path: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Gemba,
    #[serde(rename = "prompt1")]
    Prompt1Perplexity,
    #[serde(rename = "prompt2")]
    Prompt2Token,
    #[serde(rename = "prompt3")]
    Prompt3Sentence,
    Cot1,
    Cot2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Gemba,
        EstimatorKind::Prompt1Perplexity,
        EstimatorKind::Prompt2Token,
        EstimatorKind::Prompt3Sentence,
        EstimatorKind::Cot1,
        EstimatorKind::Cot2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Gemba => "gemba",
            EstimatorKind::Prompt1Perplexity => "prompt1",
            EstimatorKind::Prompt2Token => "prompt2",
            EstimatorKind::Prompt3Sentence => "prompt3",
            EstimatorKind::Cot1 => "cot1",
            EstimatorKind::Cot2 => "cot2",
        }
    }

    /// Row label and category used in reports.
    pub fn display_name(self) -> (&'static str, &'static str) {
        match self {
            EstimatorKind::Gemba => ("GEMBA", "One Step LLMs"),
            EstimatorKind::Prompt1Perplexity => ("Prompt1(Perplexity)", "One Step LLMs"),
            EstimatorKind::Prompt2Token => ("Prompt2(Token)", "One Step LLMs"),
            EstimatorKind::Prompt3Sentence => ("Prompt3(Sentence)", "One Step LLMs"),
            EstimatorKind::Cot1 => ("CoT1(ppl+token)", "CoT LLMs"),
            EstimatorKind::Cot2 => ("CoT2(ppl + token + sent)", "CoT LLMs"),
        }
    }

    /// Template families of the independent steps, in order.
    fn step_families(self) -> &'static [&'static str] {
        match self {
            EstimatorKind::Gemba => &["gemba_classify"],
            EstimatorKind::Prompt1Perplexity => &["kpe_perplexity"],
            EstimatorKind::Prompt2Token => &["kpe_token_sim"],
            EstimatorKind::Prompt3Sentence => &["kpe_sent_sim"],
            EstimatorKind::Cot1 => &["kpe_perplexity", "kpe_token_sim"],
            EstimatorKind::Cot2 => &["kpe_perplexity", "kpe_token_sim", "kpe_sent_sim"],
        }
    }

    /// Combining family and the placeholder each step's answer binds to.
    fn combiner(self) -> Option<(&'static str, &'static [&'static str])> {
        match self {
            EstimatorKind::Cot1 => Some(("kpe_cot1_combine", &["perplexity_answer", "token_answer"])),
            EstimatorKind::Cot2 => Some((
                "kpe_cot2_combine",
                &["perplexity_answer", "token_answer", "sentence_answer"],
            )),
            _ => None,
        }
    }

    pub fn is_chain(self) -> bool {
        self.combiner().is_some()
    }

    /// Number of step records every score of this kind carries.
    pub fn step_count(self) -> usize {
        self.step_families().len() + usize::from(self.is_chain())
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "gemba" => EstimatorKind::Gemba,
            "prompt1" | "prompt1_perplexity" | "perplexity" => EstimatorKind::Prompt1Perplexity,
            "prompt2" | "prompt2_token" | "token" => EstimatorKind::Prompt2Token,
            "prompt3" | "prompt3_sentence" | "sentence" => EstimatorKind::Prompt3Sentence,
            "cot1" => EstimatorKind::Cot1,
            "cot2" => EstimatorKind::Cot2,
            _ => return Err(format!("unknown estimator `{s}`")),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Estimator {
    pub kind: EstimatorKind,
    pub mode: ScoringMode,
}

impl Estimator {
    pub fn new(kind: EstimatorKind, mode: ScoringMode) -> Result<Self, ChainError> {
        if kind.is_chain() && !mode.is_categorical() {
            return Err(ChainError::UnsupportedMode { kind, mode });
        }
        Ok(Self { kind, mode })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepFailurePolicy {
    /// Skip the combining prompt and mark the pair as errored.
    #[default]
    AbortPair,
    /// Bind the middle class of the failed step and continue.
    SubstituteMiddle,
}

impl FromStr for StepFailurePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abort_pair" => Ok(StepFailurePolicy::AbortPair),
            "substitute_middle" => Ok(StepFailurePolicy::SubstituteMiddle),
            _ => Err(format!("unknown step failure policy `{s}` (expected abort_pair or substitute_middle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub template_id: String,
    pub version: u32,
    pub digest: String,
    pub parsed: Option<ParsedResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Kept in memory only; raw text lives in the cache under `digest`.
    #[serde(skip)]
    pub raw_response: Option<String>,
    #[serde(skip)]
    pub bindings: BTreeMap<String, String>,
}

impl StepRecord {
    /// Re-renders the step from its bindings and returns the request digest.
    pub fn rerender_digest(&self, registry: &TemplateRegistry, params: &GenParams) -> Result<String, PromptError> {
        let template = registry.get(&self.template_id)?;
        let prompt = render_template(template, &self.bindings)?;
        Ok(CompletionRequest::new(prompt, params.clone()).digest())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub lp: LanguagePair,
    pub system_id: String,
    pub seg_id: String,
    pub estimator: EstimatorKind,
    pub mode: ScoringMode,
    pub ordinal: Option<i64>,
    pub error: Option<String>,
    pub steps: Vec<StepRecord>,
}

impl QualityScore {
    pub fn key(&self) -> OutputKey {
        (self.lp.clone(), self.system_id.clone(), self.seg_id.clone())
    }
}

/// One `(src, mt)` pair to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairInput {
    pub lp: LanguagePair,
    pub system_id: String,
    pub seg_id: String,
    pub src: String,
    pub mt: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub parsed: usize,
    /// Final answer unparseable.
    pub dropped: usize,
    /// Provider failures and aborted chains.
    pub errored: usize,
}

impl ScoreSummary {
    pub fn total(&self) -> usize {
        self.parsed + self.dropped + self.errored
    }

    /// Share of scores without an ordinal.
    pub fn error_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            (self.dropped + self.errored) as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub estimator: Estimator,
    pub scores: BTreeMap<OutputKey, QualityScore>,
    pub summary: ScoreSummary,
}

const ERR_PARSE: &str = "parse: ";
const ERR_BACKEND: &str = "backend: ";
const ERR_STEP: &str = "step failed: ";

fn summarize<'a>(scores: impl Iterator<Item = &'a QualityScore>) -> ScoreSummary {
    let mut s = ScoreSummary::default();
    for q in scores {
        match (&q.ordinal, &q.error) {
            (Some(_), _) => s.parsed += 1,
            (None, Some(e)) if e.starts_with(ERR_PARSE) => s.dropped += 1,
            _ => s.errored += 1,
        }
    }
    s
}

impl ScoreTable {
    pub fn from_scores(estimator: Estimator, scores: impl IntoIterator<Item = QualityScore>) -> Self {
        let scores: BTreeMap<_, _> = scores.into_iter().map(|q| (q.key(), q)).collect();
        let summary = summarize(scores.values());
        Self {
            estimator,
            scores,
            summary,
        }
    }

    pub fn get(&self, lp: &LanguagePair, system_id: &str, seg_id: &str) -> Option<&QualityScore> {
        self.scores
            .get(&(lp.clone(), system_id.to_string(), seg_id.to_string()))
    }

    pub fn lps(&self) -> Vec<LanguagePair> {
        let mut lps: Vec<LanguagePair> = self.scores.keys().map(|k| k.0.clone()).collect();
        lps.dedup();
        lps
    }

    /// One JSON object per score, in key order.
    pub fn write_jsonl(&self, path: &Path) -> io::Result<()> {
        let mut w = io::BufWriter::new(fs::File::create(path)?);
        for q in self.scores.values() {
            serde_json::to_writer(&mut w, q)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, ChainError> {
        let err = |message: String| ChainError::ScoreFile {
            path: path.display().to_string(),
            message,
        };
        let file = fs::File::open(path).map_err(|e| err(e.to_string()))?;
        let mut scores = Vec::new();
        for (i, line) in io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let q: QualityScore = serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
            scores.push(q);
        }
        let first = scores.first().ok_or_else(|| err("no scores".into()))?;
        let estimator = Estimator {
            kind: first.estimator,
            mode: first.mode,
        };
        if scores.iter().any(|q| q.estimator != estimator.kind || q.mode != estimator.mode) {
            return Err(err("mixes estimators or modes".into()));
        }
        Ok(Self::from_scores(estimator, scores))
    }
}

/// Middle class of a categorical template, used by the substitute policy.
fn middle_class(template: &PromptTemplate) -> Option<String> {
    template.classes().map(|c| c[(c.len() - 1) / 2].clone())
}

fn input_bindings(template: &PromptTemplate, pair: &PairInput) -> BTreeMap<String, String> {
    template
        .placeholder_names()
        .filter_map(|name| match name {
            "source_seg" => Some((name.to_string(), pair.src.clone())),
            "target_seg" => Some((name.to_string(), pair.mt.clone())),
            _ => None,
        })
        .collect()
}

/// Runs estimators against a provider, optionally through a disk cache.
pub struct Scorer<'a> {
    pub registry: &'a TemplateRegistry,
    pub provider: &'a dyn Provider,
    pub cache: Option<&'a DiskCache>,
    pub params: GenParams,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    pub step_failure: StepFailurePolicy,
}

struct PairState {
    steps: Vec<StepRecord>,
    /// Set once the pair can no longer produce a score.
    failed: Option<String>,
}

impl<'a> Scorer<'a> {
    pub fn new(registry: &'a TemplateRegistry, provider: &'a dyn Provider, params: GenParams) -> Self {
        Self {
            registry,
            provider,
            cache: None,
            params,
            retry: RetryPolicy::default(),
            max_in_flight: 4,
            step_failure: StepFailurePolicy::default(),
        }
    }

    pub fn with_cache(mut self, cache: &'a DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Sends one stage for the pairs in `active`, appending a step record to each.
    fn run_stage(
        &self,
        template: &PromptTemplate,
        pairs: &[PairInput],
        active: &[usize],
        binds: impl Fn(usize) -> BTreeMap<String, String>,
        states: &mut [PairState],
    ) -> Result<(), ChainError> {
        let mut requests = Vec::with_capacity(active.len());
        let mut rendered = Vec::with_capacity(active.len());
        for &i in active {
            let b = binds(i);
            let prompt = render_template(template, &b)?;
            requests.push(
                CompletionRequest::new(prompt, self.params.clone()).with_context(pairs[i].lp.clone(), pairs[i].seg_id.clone()),
            );
            rendered.push(b);
        }
        let results = run_batch(self.provider, self.cache, &requests, &self.retry, self.max_in_flight)?;
        for (((&i, req), b), res) in active.iter().zip(&requests).zip(rendered).zip(results) {
            let mut record = StepRecord {
                template_id: template.template_id.clone(),
                version: template.version,
                digest: req.digest(),
                parsed: None,
                error: None,
                raw_response: None,
                bindings: b,
            };
            match res {
                Ok(r) => {
                    match parse_response(&r.text, &template.response_schema) {
                        Ok(p) => record.parsed = Some(p),
                        Err(e) => record.error = Some(format!("{ERR_PARSE}{e}")),
                    }
                    record.raw_response = Some(r.text);
                }
                Err(e) => record.error = Some(format!("{ERR_BACKEND}{e}")),
            }
            states[i].steps.push(record);
        }
        Ok(())
    }

    /// Scores every pair with `estimator`, one batch per chain stage.
    pub fn score_pairs(&self, estimator: Estimator, pairs: &[PairInput]) -> Result<Vec<QualityScore>, ChainError> {
        let Estimator { kind, mode } = Estimator::new(estimator.kind, estimator.mode)?;
        for p in pairs {
            if p.mt.trim().is_empty() {
                return Err(ChainError::Input(format!("{}/{}/{}: empty translation", p.lp, p.system_id, p.seg_id)));
            }
            if p.src.trim().is_empty() && kind != EstimatorKind::Prompt1Perplexity {
                return Err(ChainError::Input(format!("{}/{}/{}: empty source", p.lp, p.system_id, p.seg_id)));
            }
        }
        let mut states: Vec<PairState> = pairs
            .iter()
            .map(|_| PairState {
                steps: Vec::with_capacity(kind.step_count()),
                failed: None,
            })
            .collect();
        let all: Vec<usize> = (0..pairs.len()).collect();

        let step_templates: Vec<&PromptTemplate> = kind
            .step_families()
            .iter()
            .map(|f| self.registry.variant(f, mode))
            .collect::<Result<_, _>>()?;
        for template in &step_templates {
            self.run_stage(template, pairs, &all, |i| input_bindings(template, &pairs[i]), &mut states)?;
        }

        if let Some((combine_family, answer_names)) = kind.combiner() {
            let combiner = self.registry.variant(combine_family, mode)?;
            let mut answers: Vec<Option<Vec<String>>> = vec![None; pairs.len()];
            for (i, state) in states.iter_mut().enumerate() {
                let mut bound = Vec::with_capacity(answer_names.len());
                for (step, template) in state.steps.iter().zip(&step_templates) {
                    match (&step.parsed, self.step_failure) {
                        (Some(p), _) => bound.push(p.answer_text()),
                        (None, StepFailurePolicy::SubstituteMiddle) if middle_class(template).is_some() => {
                            bound.push(middle_class(template).unwrap())
                        }
                        (None, _) => {
                            state.failed = Some(format!(
                                "{ERR_STEP}{}: {}",
                                step.template_id,
                                step.error.as_deref().unwrap_or("no answer")
                            ));
                            break;
                        }
                    }
                }
                if state.failed.is_none() {
                    answers[i] = Some(bound);
                }
            }
            let active: Vec<usize> = (0..pairs.len()).filter(|&i| answers[i].is_some()).collect();
            self.run_stage(
                combiner,
                pairs,
                &active,
                |i| {
                    let mut b = input_bindings(combiner, &pairs[i]);
                    for (name, value) in answer_names.iter().zip(answers[i].as_ref().unwrap()) {
                        b.insert(name.to_string(), value.clone());
                    }
                    b
                },
                &mut states,
            )?;
        }

        Ok(pairs
            .iter()
            .zip(states)
            .map(|(pair, state)| {
                let (ordinal, error) = match state.failed {
                    Some(e) => (None, Some(e)),
                    None => {
                        let last = state.steps.last().expect("every pair has at least one step");
                        (last.parsed.as_ref().map(ParsedResponse::ordinal), last.error.clone())
                    }
                };
                QualityScore {
                    lp: pair.lp.clone(),
                    system_id: pair.system_id.clone(),
                    seg_id: pair.seg_id.clone(),
                    estimator: kind,
                    mode,
                    ordinal,
                    error,
                    steps: state.steps,
                }
            })
            .collect())
    }

    fn single(&self, kind: EstimatorKind, mode: ScoringMode, pair: &PairInput) -> Result<QualityScore, ChainError> {
        let estimator = Estimator::new(kind, mode)?;
        Ok(self
            .score_pairs(estimator, std::slice::from_ref(pair))?
            .pop()
            .expect("one pair in, one score out"))
    }

    /// GEMBA or one of the three single-prompt estimators.
    pub fn estimate_one_step(&self, kind: EstimatorKind, mode: ScoringMode, pair: &PairInput) -> Result<QualityScore, ChainError> {
        if kind.is_chain() {
            return Err(ChainError::Input(format!("{kind} is not a one-step estimator")));
        }
        self.single(kind, mode, pair)
    }

    pub fn estimate_cot1(&self, mode: ScoringMode, pair: &PairInput) -> Result<QualityScore, ChainError> {
        self.single(EstimatorKind::Cot1, mode, pair)
    }

    pub fn estimate_cot2(&self, mode: ScoringMode, pair: &PairInput) -> Result<QualityScore, ChainError> {
        self.single(EstimatorKind::Cot2, mode, pair)
    }

    /// One score per system output in the dataset.
    pub fn score_dataset(&self, estimator: Estimator, dataset: &EvalDataset) -> Result<ScoreTable, ChainError> {
        let pairs = dataset_pairs(dataset);
        let scores = self.score_pairs(estimator, &pairs)?;
        Ok(ScoreTable::from_scores(estimator, scores))
    }
}

/// Every system output joined with its source segment, in key order.
pub fn dataset_pairs(dataset: &EvalDataset) -> Vec<PairInput> {
    dataset
        .outputs()
        .map(|o| PairInput {
            lp: o.lp.clone(),
            system_id: o.system_id.clone(),
            seg_id: o.seg_id.clone(),
            src: dataset
                .segment(&o.lp, &o.seg_id)
                .map(|s| s.src_text.clone())
                .unwrap_or_default(),
            mt: o.mt_text.clone(),
        })
        .collect()
}

/// Rebuilds the bindings of every step of a score loaded from disk, given
/// the pair text and the step-failure policy the run used.
pub fn reconstruct_bindings(
    score: &QualityScore,
    pair: &PairInput,
    registry: &TemplateRegistry,
    step_failure: StepFailurePolicy,
) -> Result<Vec<BTreeMap<String, String>>, ChainError> {
    let mut out = Vec::with_capacity(score.steps.len());
    let mut answers = Vec::new();
    let answer_names = score.estimator.combiner().map(|(_, n)| n).unwrap_or(&[]);
    let n_steps = score.estimator.step_families().len();
    for (k, step) in score.steps.iter().enumerate() {
        let template = registry.get(&step.template_id)?;
        let mut b = input_bindings(template, pair);
        if k < n_steps {
            answers.push(match (&step.parsed, step_failure) {
                (Some(p), _) => Some(p.answer_text()),
                (None, StepFailurePolicy::SubstituteMiddle) => middle_class(template),
                (None, StepFailurePolicy::AbortPair) => None,
            });
        } else {
            for (name, value) in answer_names.iter().zip(&answers) {
                let value = value
                    .clone()
                    .ok_or_else(|| ChainError::Input("combine step recorded after a failed step".into()))?;
                b.insert(name.to_string(), value);
            }
        }
        out.push(b);
    }
    Ok(out)
}
