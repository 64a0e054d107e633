//! Deterministic stand-in for a language model.
//!
//! Grading prompts are answered by comparing the translation with a
//! pseudo-reference held in the fixture table. The character-trigram overlap
//! coefficient `o` (both strings lowercased) picks the class: with `K`
//! classes the answer is class `floor(o * K)`, capped at `K - 1`, which for
//! five classes gives the cut points 0.2, 0.4, 0.6 and 0.8. Star and scalar
//! prompts map `o` onto their range the same way. Token alignment prompts are
//! answered with a percentage matrix built from [`crate::alignment::mock_cell`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionRequest, Provider};
use crate::alignment::{mock_cell, parse_numbered_tokens};
use crate::corpus::{CorpusError, LanguagePair};
use crate::prompting::ResponseSchema;

/// One fixture row.
///
/// `template_references` swaps in a different pseudo-reference for a given
/// template id or family; `raw_responses` returns the given text verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockFixture {
    pub lp: LanguagePair,
    pub seg_id: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub template_references: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub raw_responses: BTreeMap<String, String>,
}

impl MockFixture {
    pub fn new(lp: LanguagePair, seg_id: impl Into<String>, reference: impl Into<String>) -> Self {
        Self {
            lp,
            seg_id: seg_id.into(),
            reference: reference.into(),
            template_references: BTreeMap::new(),
            raw_responses: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockFixtures {
    rows: HashMap<(LanguagePair, String), MockFixture>,
}

impl MockFixtures {
    pub fn new(rows: impl IntoIterator<Item = MockFixture>) -> Self {
        Self {
            rows: rows
                .into_iter()
                .map(|f| ((f.lp.clone(), f.seg_id.clone()), f))
                .collect(),
        }
    }

    /// Reads a JSONL fixture file, one [`MockFixture`] per line.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: MockFixture = serde_json::from_str(line).map_err(|e| CorpusError::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        Ok(Self::new(rows))
    }

    pub fn get(&self, lp: &LanguagePair, seg_id: &str) -> Option<&MockFixture> {
        self.rows.get(&(lp.clone(), seg_id.to_string()))
    }

    pub fn insert(&mut self, row: MockFixture) {
        self.rows.insert((row.lp.clone(), row.seg_id.clone()), row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn trigrams(s: &str) -> BTreeSet<String> {
    let lower: Vec<char> = s.to_lowercase().chars().collect();
    if lower.is_empty() {
        return BTreeSet::new();
    }
    if lower.len() < 3 {
        return BTreeSet::from([lower.iter().collect()]);
    }
    lower.windows(3).map(|w| w.iter().collect()).collect()
}

/// Overlap coefficient of lowercased character-trigram sets as
/// `(shared, min(|A|, |B|))`. Strings under three characters count as one gram.
pub fn trigram_overlap(a: &str, b: &str) -> (usize, usize) {
    let ta = trigrams(a);
    let tb = trigrams(b);
    (ta.intersection(&tb).count(), ta.len().min(tb.len()))
}

/// `floor(shared / denom * bins)` capped at `bins - 1`, in integer arithmetic.
fn bin(shared: usize, denom: usize, bins: usize) -> usize {
    if denom == 0 {
        return 0;
    }
    (shared * bins / denom).min(bins - 1)
}

fn matrix_response(request: &CompletionRequest) -> String {
    let tokens = |name: &str| {
        request
            .prompt
            .bindings
            .get(name)
            .map(|s| parse_numbered_tokens(s))
            .unwrap_or_default()
    };
    let src = tokens("source_seg");
    let mt = tokens("target_seg");
    src.iter()
        .map(|s| {
            mt.iter()
                .map(|m| format!("{}", (mock_cell(s, m) * 100.0).round() as i64))
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// The mock's answer for `request`.
pub fn mock_complete(request: &CompletionRequest, fixtures: &MockFixtures) -> Result<String, BackendError> {
    if request.prompt.response_schema == ResponseSchema::Matrix {
        return Ok(matrix_response(request));
    }
    let missing = || {
        let (lp, seg_id) = request
            .context
            .as_ref()
            .map(|c| (c.lp.to_string(), c.seg_id.clone()))
            .unwrap_or_else(|| ("?".into(), "?".into()));
        BackendError::MissingFixture { lp, seg_id }
    };
    let ctx = request.context.as_ref().ok_or_else(missing)?;
    let fixture = fixtures.get(&ctx.lp, &ctx.seg_id).ok_or_else(missing)?;
    let keys = [request.prompt.template_id.as_str(), request.prompt.family.as_str()];
    if let Some(raw) = keys.iter().find_map(|k| fixture.raw_responses.get(*k)) {
        return Ok(raw.clone());
    }
    let reference = keys
        .iter()
        .find_map(|k| fixture.template_references.get(*k))
        .unwrap_or(&fixture.reference);
    let mt = request.prompt.bindings.get("target_seg").map(String::as_str).unwrap_or("");
    let (shared, denom) = trigram_overlap(mt, reference);
    Ok(match &request.prompt.response_schema {
        ResponseSchema::Categorical { classes } => {
            format!("Class: {}", classes[bin(shared, denom, classes.len())])
        }
        ResponseSchema::Stars { min, max } => {
            let n = (max - min + 1) as usize;
            format!("Stars: {}", *min as usize + bin(shared, denom, n))
        }
        ResponseSchema::Scalar { lo, hi } => {
            let o = if denom == 0 { 0.0 } else { shared as f64 / denom as f64 };
            format!("Score: {}", (lo + o * (hi - lo)).round())
        }
        ResponseSchema::Matrix => unreachable!(),
    })
}

/// [`mock_complete`] as a [`Provider`], optionally sleeping a
/// request-dependent pseudo-random time within `latency_ms`.
pub struct MockProvider {
    fixtures: MockFixtures,
    latency_ms: Option<(u64, u64)>,
}

impl MockProvider {
    pub fn new(fixtures: MockFixtures) -> Self {
        Self {
            fixtures,
            latency_ms: None,
        }
    }

    pub fn with_latency(mut self, min_ms: u64, max_ms: u64) -> Self {
        self.latency_ms = Some((min_ms, max_ms.max(min_ms)));
        self
    }

    pub fn fixtures(&self) -> &MockFixtures {
        &self.fixtures
    }
}

impl Provider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        if let Some((lo, hi)) = self.latency_ms {
            let digest = request.digest();
            let seed = u64::from_str_radix(&digest[..12], 16).unwrap_or(0);
            thread::sleep(Duration::from_millis(lo + seed % (hi - lo + 1)));
        }
        mock_complete(request, &self.fixtures)
    }
}
