//! Completion providers, the content-addressed response cache and the
//! bounded-concurrency batch executor.

mod cache;
mod http;
mod mock;

pub use cache::{CacheEntry, CacheLookup, DiskCache};
pub use http::{HttpConfig, HttpProvider};
pub use mock::{mock_complete, trigram_overlap, MockFixture, MockFixtures, MockProvider};

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::LanguagePair;
use crate::prompting::RenderedPrompt;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimit(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider returned {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("no mock fixture for {lp}/{seg_id}")]
    MissingFixture { lp: String, seg_id: String },
    #[error("cache entry {0} is corrupt")]
    CacheCorruption(String),
    #[error("cache I/O: {0}")]
    CacheIo(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::RateLimit(_) | BackendError::Transport(_))
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cache corruption storm: {corrupted} of {total} entries were corrupt")]
    CorruptionStorm { corrupted: usize, total: usize },
    #[error("max_in_flight must be at least 1")]
    ZeroConcurrency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
}

impl GenParams {
    /// Greedy decoding, 256 tokens, no stop sequences.
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            temperature: 0.0,
            max_tokens: 256,
            stop: None,
        }
    }
}

/// Which dataset row a request belongs to. Only the mock provider reads it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentRef {
    pub lp: LanguagePair,
    pub seg_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: RenderedPrompt,
    pub params: GenParams,
    pub context: Option<SegmentRef>,
}

impl CompletionRequest {
    pub fn new(prompt: RenderedPrompt, params: GenParams) -> Self {
        Self {
            prompt,
            params,
            context: None,
        }
    }

    pub fn with_context(mut self, lp: LanguagePair, seg_id: impl Into<String>) -> Self {
        self.context = Some(SegmentRef {
            lp,
            seg_id: seg_id.into(),
        });
        self
    }

    pub fn digest(&self) -> String {
        cache_key(
            &self.params.model_id,
            &self.prompt.template_id,
            self.prompt.version,
            &self.prompt.final_text,
            &self.params,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub provider_id: String,
    pub from_cache: bool,
    pub latency_ms: u64,
    pub request_digest: String,
    /// Attempts beyond the first.
    pub retries: u32,
}

fn put_field(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u64).to_be_bytes());
    buf.extend_from_slice(bytes);
}

/// SHA-256 over a length-prefixed canonical encoding of the request.
///
/// Layout: tag `kpe-cache-v1`, model id, template id, version (u32 BE),
/// final text, temperature (f64 BE), max tokens (u32 BE), each as a
/// u64-BE-length-prefixed field; then a presence byte for stop sequences,
/// followed by their count (u64 BE) and each sequence length-prefixed.
/// `params.model_id` is not read; the explicit `model_id` argument is.
pub fn cache_key(model_id: &str, template_id: &str, template_version: u32, final_text: &str, params: &GenParams) -> String {
    let mut buf = Vec::with_capacity(final_text.len() + 128);
    put_field(&mut buf, b"kpe-cache-v1");
    put_field(&mut buf, model_id.as_bytes());
    put_field(&mut buf, template_id.as_bytes());
    put_field(&mut buf, &template_version.to_be_bytes());
    put_field(&mut buf, final_text.as_bytes());
    // -0.0 and 0.0 are the same request
    let temperature = if params.temperature == 0.0 { 0.0f64 } else { params.temperature };
    put_field(&mut buf, &temperature.to_be_bytes());
    put_field(&mut buf, &params.max_tokens.to_be_bytes());
    match &params.stop {
        None => buf.push(0),
        Some(stops) => {
            buf.push(1);
            buf.extend_from_slice(&(stops.len() as u64).to_be_bytes());
            for s in stops {
                put_field(&mut buf, s.as_bytes());
            }
        }
    }
    hex::encode(Sha256::digest(&buf))
}

pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

/// Counts calls that reach the wrapped provider.
pub struct Counted<P> {
    inner: P,
    calls: AtomicU64,
}

impl<P: Provider> Counted<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Provider> Provider for Counted<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

/// Exponential backoff for transient failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub factor: f64,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, for `attempt >= 1`.
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.mul_f64(self.factor.powi(attempt.saturating_sub(1) as i32))
    }
}

/// Calls the provider, retrying transient failures per `retry`.
pub fn complete(
    provider: &dyn Provider,
    request: &CompletionRequest,
    retry: &RetryPolicy,
) -> Result<CompletionResult, BackendError> {
    let digest = request.digest();
    let started = Instant::now();
    let mut attempt = 1;
    loop {
        match provider.complete(request) {
            Ok(text) => {
                return Ok(CompletionResult {
                    text,
                    provider_id: provider.id().to_string(),
                    from_cache: false,
                    latency_ms: started.elapsed().as_millis() as u64,
                    request_digest: digest,
                    retries: attempt - 1,
                })
            }
            Err(e) if e.is_retryable() && attempt < retry.max_attempts.max(1) => {
                let delay = retry.delay(attempt);
                log::warn!("attempt {attempt} for {} failed ({e}); retrying in {delay:?}", &digest[..12]);
                thread::sleep(delay);
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Outcome of a cached completion plus whether a corrupt entry was quarantined on the way.
struct CachedOutcome {
    result: Result<CompletionResult, BackendError>,
    corrupted: bool,
}

fn cached_complete_inner(
    provider: &dyn Provider,
    cache: Option<&DiskCache>,
    request: &CompletionRequest,
    retry: &RetryPolicy,
) -> CachedOutcome {
    let Some(cache) = cache else {
        return CachedOutcome {
            result: complete(provider, request, retry),
            corrupted: false,
        };
    };
    let digest = request.digest();
    let started = Instant::now();
    let mut corrupted = false;
    match cache.lookup(&digest) {
        CacheLookup::Hit(entry) => {
            return CachedOutcome {
                result: Ok(CompletionResult {
                    text: entry.completion,
                    provider_id: provider.id().to_string(),
                    from_cache: true,
                    latency_ms: started.elapsed().as_millis() as u64,
                    request_digest: digest,
                    retries: 0,
                }),
                corrupted: false,
            }
        }
        CacheLookup::Corrupt => corrupted = true,
        CacheLookup::Miss => {}
    }
    let result = complete(provider, request, retry).and_then(|res| {
        let entry = CacheEntry::new(request, &res.text);
        cache
            .store(&entry)
            .map_err(|e| BackendError::CacheIo(e.to_string()))?;
        Ok(res)
    });
    CachedOutcome { result, corrupted }
}

/// Serves from the cache when possible, otherwise completes and persists.
///
/// A corrupt cache entry is quarantined and treated as a miss.
pub fn cached_complete(
    provider: &dyn Provider,
    cache: Option<&DiskCache>,
    request: &CompletionRequest,
    retry: &RetryPolicy,
) -> Result<CompletionResult, BackendError> {
    cached_complete_inner(provider, cache, request, retry).result
}

/// Runs `requests` with at most `max_in_flight` outstanding provider calls.
///
/// Results come back in input order. Requests with equal digests are sent
/// once; later duplicates are served from the first result with
/// `from_cache = true`. Per-item failures stay in their slot.
pub fn run_batch(
    provider: &dyn Provider,
    cache: Option<&DiskCache>,
    requests: &[CompletionRequest],
    retry: &RetryPolicy,
    max_in_flight: usize,
) -> Result<Vec<Result<CompletionResult, BackendError>>, BatchError> {
    if max_in_flight == 0 {
        return Err(BatchError::ZeroConcurrency);
    }
    let digests: Vec<String> = requests.iter().map(CompletionRequest::digest).collect();
    let mut first_of: HashMap<&str, usize> = HashMap::new();
    let mut unique: Vec<usize> = Vec::new();
    for (i, d) in digests.iter().enumerate() {
        first_of.entry(d.as_str()).or_insert_with(|| {
            unique.push(i);
            i
        });
    }

    let slots: Vec<Mutex<Option<CachedOutcome>>> = unique.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.min(unique.len());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= unique.len() {
                    break;
                }
                let outcome = cached_complete_inner(provider, cache, &requests[unique[k]], retry);
                *slots[k].lock().unwrap() = Some(outcome);
            });
        }
    });

    let outcomes: Vec<CachedOutcome> = slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every unique request is processed"))
        .collect();
    let corrupted = outcomes.iter().filter(|o| o.corrupted).count();
    if !requests.is_empty() && corrupted * 2 > requests.len() {
        return Err(BatchError::CorruptionStorm {
            corrupted,
            total: requests.len(),
        });
    }
    let slot_of: HashMap<usize, usize> = unique.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    Ok(digests
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let first = first_of[d.as_str()];
            let res = outcomes[slot_of[&first]].result.clone();
            if i == first {
                res
            } else {
                res.map(|mut r| {
                    r.from_cache = true;
                    r.retries = 0;
                    r
                })
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::{bindings, render_template, TemplateRegistry};

    #[test]
    fn golden_digests() {
        // computed independently from the documented layout
        let p = GenParams::new("gpt-4");
        assert_eq!(
            cache_key("gpt-4", "gemba_classify", 1, "Classify this.", &p),
            "8d08cca610872a870a178d6785cb6a7ac55f282bfe0c9f79a6705159e6166301"
        );
        let hot = GenParams {
            temperature: 0.7,
            ..p.clone()
        };
        assert_eq!(
            cache_key("gpt-4", "gemba_classify", 1, "Classify this.", &hot),
            "43489e7241172c617185a8c20eb393c6cf146691dfd3a36e76bc55d7be187345"
        );
        let stop = GenParams {
            max_tokens: 64,
            stop: Some(vec!["\n\n".into()]),
            ..p
        };
        assert_eq!(
            cache_key("gpt-4", "kpe_perplexity", 2, "他今天来了", &stop),
            "14731d8d0051d6a1cd064cab7677d978fd03717da1d58600471212f8e00c8d6b"
        );
    }

    #[test]
    fn digest_is_sensitive_to_every_field() {
        let p = GenParams::new("m");
        let base = cache_key("m", "t", 1, "x", &p);
        assert_eq!(base, cache_key("m", "t", 1, "x", &p));
        assert_ne!(base, cache_key("m2", "t", 1, "x", &p));
        assert_ne!(base, cache_key("m", "t2", 1, "x", &p));
        assert_ne!(base, cache_key("m", "t", 2, "x", &p));
        assert_ne!(base, cache_key("m", "t", 1, "y", &p));
        assert_ne!(base, cache_key("m", "t", 1, "x", &GenParams { max_tokens: 1, ..p.clone() }));
        assert_ne!(base, cache_key("m", "t", 1, "x", &GenParams { stop: Some(vec![]), ..p.clone() }));
        assert_eq!(base, cache_key("m", "t", 1, "x", &GenParams { temperature: -0.0, ..p }));
        // length prefixes keep field boundaries unambiguous
        assert_ne!(cache_key("ab", "c", 1, "x", &GenParams::new("")), cache_key("a", "bc", 1, "x", &GenParams::new("")));
    }

    #[test]
    fn retry_delays_double() {
        let r = RetryPolicy::default();
        assert_eq!(r.delay(1), Duration::from_secs(1));
        assert_eq!(r.delay(2), Duration::from_secs(2));
        assert_eq!(r.delay(4), Duration::from_secs(8));
    }

    pub(crate) struct Scripted {
        pub replies: Mutex<Vec<Result<String, BackendError>>>,
    }

    impl Provider for Scripted {
        fn id(&self) -> &str {
            "scripted"
        }

        fn complete(&self, _: &CompletionRequest) -> Result<String, BackendError> {
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn request(text: &str) -> CompletionRequest {
        let reg = TemplateRegistry::builtin();
        let t = reg.get("kpe_perplexity").unwrap();
        CompletionRequest::new(
            render_template(t, &bindings([("target_seg", text)])).unwrap(),
            GenParams::new("m"),
        )
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            base_delay: Duration::from_millis(1),
            ..RetryPolicy::default()
        }
    }

    #[test]
    fn rate_limit_then_success_records_one_retry() {
        let p = Counted::new(Scripted {
            replies: Mutex::new(vec![Err(BackendError::RateLimit("429".into())), Ok("Class: x".into())]),
        });
        let res = complete(&p, &request("a"), &fast()).unwrap();
        assert_eq!(res.retries, 1);
        assert_eq!(p.calls(), 2);
    }

    #[test]
    fn auth_error_is_not_retried() {
        let p = Counted::new(Scripted {
            replies: Mutex::new(vec![Err(BackendError::Auth("401".into())), Ok("never".into())]),
        });
        assert!(matches!(complete(&p, &request("a"), &fast()), Err(BackendError::Auth(_))));
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn transient_failures_give_up_after_max_attempts() {
        let p = Counted::new(Scripted {
            replies: Mutex::new((0..6).map(|_| Err(BackendError::Transport("down".into()))).collect()),
        });
        assert!(matches!(complete(&p, &request("a"), &fast()), Err(BackendError::Transport(_))));
        assert_eq!(p.calls(), 5);
    }
}
