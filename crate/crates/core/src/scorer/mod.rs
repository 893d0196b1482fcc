//! Client for an external scoring service (neural reference-based or
//! quality-estimation metrics) exposed as a decoding utility.
//!
//! Wire protocol: `POST {base_url}/score` with
//! `{"items": [{"src": str|null, "hyp": str, "ref": str|null, "context": [str]?}]}`,
//! answered by `{"scores": [float]}` in item order.

mod cache;
mod mock;

pub use cache::{cache_key, ScoreCache};
pub use mock::{mock_score, MockBehavior, MockScorer};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::decoding::{PairFailure, Utility, UtilityContext, UtilityFunction};
use crate::error::{Error, Result};

/// Overrides `ScorerEndpoint::base_url`.
pub const SCORER_URL_ENV: &str = "DISCOQAD_SCORER_URL";
/// Overrides the score cache path.
pub const SCORER_CACHE_ENV: &str = "DISCOQAD_SCORER_CACHE";

const BODY_EXCERPT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerMode {
    /// Scores `(src?, hyp, ref)`; the pseudo-reference is sent as `ref`.
    ReferenceBased,
    /// Quality estimation on `(src, hyp)`; the pseudo-reference is ignored.
    ReferenceFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerEndpoint {
    pub name: String,
    pub base_url: String,
    pub mode: ScorerMode,
    #[serde(default = "defaults::timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "defaults::max_batch")]
    pub max_batch: usize,
    #[serde(default = "defaults::retries")]
    pub retries: u32,
    /// Batches in flight at once.
    #[serde(default = "defaults::concurrency")]
    pub concurrency: usize,
    /// Whether every item must carry a source sentence.
    #[serde(default)]
    pub requires_source: bool,
    /// Sent as `Authorization: Bearer <token>` when set.
    #[serde(default)]
    pub bearer_token: Option<String>,
    /// First retry delay; doubles on each further attempt.
    #[serde(default = "defaults::backoff_ms")]
    pub backoff_ms: u64,
}

mod defaults {
    pub fn timeout_ms() -> u64 {
        30_000
    }
    pub fn max_batch() -> usize {
        64
    }
    pub fn retries() -> u32 {
        2
    }
    pub fn concurrency() -> usize {
        2
    }
    pub fn backoff_ms() -> u64 {
        200
    }
}

impl ScorerEndpoint {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>, mode: ScorerMode) -> Self {
        ScorerEndpoint {
            name: name.into(),
            base_url: base_url.into(),
            mode,
            timeout_ms: defaults::timeout_ms(),
            max_batch: defaults::max_batch(),
            retries: defaults::retries(),
            concurrency: defaults::concurrency(),
            requires_source: false,
            bearer_token: None,
            backoff_ms: defaults::backoff_ms(),
        }
    }

    /// Applies [`SCORER_URL_ENV`] if set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var(SCORER_URL_ENV) {
            if !url.is_empty() {
                self.base_url = url;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("invalid scorer name `{}`", self.name)));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(Error::InvalidArgument(format!(
                "scorer `{}`: base_url `{}` is not an http(s) URL",
                self.name, self.base_url
            )));
        }
        if self.max_batch == 0 || self.concurrency == 0 || self.timeout_ms == 0 {
            return Err(Error::InvalidArgument(format!(
                "scorer `{}`: max_batch, concurrency and timeout_ms must be >= 1",
                self.name
            )));
        }
        Ok(())
    }

    fn score_url(&self) -> String {
        format!("{}/score", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreItem {
    pub src: Option<String>,
    pub hyp: String,
    #[serde(rename = "ref")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<String>>,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    items: &'a [ScoreItem],
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Blocking HTTP client; safe to share across threads.
pub struct ScorerClient {
    endpoint: ScorerEndpoint,
    agent: ureq::Agent,
    requests: AtomicUsize,
}

impl std::fmt::Debug for ScorerClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScorerClient")
            .field("endpoint", &self.endpoint.name)
            .field("requests", &self.request_count())
            .finish()
    }
}

enum Attempt {
    Retry(Error),
    Fail(Error),
}

impl ScorerClient {
    pub fn new(endpoint: ScorerEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(endpoint.timeout_ms))
            .build();
        Ok(ScorerClient {
            endpoint,
            agent,
            requests: AtomicUsize::new(0),
        })
    }

    pub fn endpoint(&self) -> &ScorerEndpoint {
        &self.endpoint
    }

    /// HTTP requests sent so far, retries included.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn check_item(&self, i: usize, item: &ScoreItem) -> Result<()> {
        let needs_ref = self.endpoint.mode == ScorerMode::ReferenceBased;
        if item.reference.is_some() != needs_ref {
            return Err(Error::InvalidArgument(format!(
                "scorer `{}` item {i}: reference must be {} in {:?} mode",
                self.endpoint.name,
                if needs_ref { "present" } else { "absent" },
                self.endpoint.mode
            )));
        }
        if self.endpoint.requires_source && item.src.is_none() {
            return Err(Error::InvalidArgument(format!(
                "scorer `{}` item {i}: source sentence required",
                self.endpoint.name
            )));
        }
        Ok(())
    }

    /// One score per item, in order. Items are sent in batches of at most
    /// `max_batch`, with up to `concurrency` batches in flight.
    pub fn score_batch(&self, items: &[ScoreItem]) -> Result<Vec<f64>> {
        for (i, item) in items.iter().enumerate() {
            self.check_item(i, item)?;
        }
        let chunks: Vec<&[ScoreItem]> = items.chunks(self.endpoint.max_batch).collect();
        let mut scores = Vec::with_capacity(items.len());
        for wave in chunks.chunks(self.endpoint.concurrency) {
            let results: Vec<Result<Vec<f64>>> = if wave.len() == 1 {
                vec![self.send_with_retries(wave[0])]
            } else {
                thread::scope(|s| {
                    let handles: Vec<_> = wave.iter().map(|c| s.spawn(|| self.send_with_retries(c))).collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().unwrap_or_else(|_| Err(Error::ScorerTransport("request thread panicked".into()))))
                        .collect()
                })
            };
            for r in results {
                scores.extend(r?);
            }
        }
        Ok(scores)
    }

    fn send_with_retries(&self, chunk: &[ScoreItem]) -> Result<Vec<f64>> {
        let mut attempt = 0;
        loop {
            match self.send_once(chunk) {
                Ok(scores) => return Ok(scores),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= self.endpoint.retries => return Err(e),
                Err(Attempt::Retry(e)) => {
                    let delay = self.endpoint.backoff_ms.saturating_mul(1 << attempt.min(16));
                    log::warn!("scorer `{}`: {e}; retrying in {delay} ms", self.endpoint.name);
                    thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
            }
        }
    }

    fn send_once(&self, chunk: &[ScoreItem]) -> Result<Vec<f64>, Attempt> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let mut request = self.agent.post(&self.endpoint.score_url());
        if let Some(token) = &self.endpoint.bearer_token {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        let response = match request.send_json(ScoreRequest { items: chunk }) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, response)) => {
                let body: String = response.into_string().unwrap_or_default().chars().take(BODY_EXCERPT).collect();
                let err = Error::ScorerStatus { status, body };
                let transient = status == 429 || status >= 500;
                return Err(if transient { Attempt::Retry(err) } else { Attempt::Fail(err) });
            }
            Err(ureq::Error::Transport(t)) => return Err(Attempt::Retry(Error::ScorerTransport(t.to_string()))),
        };
        let parsed: ScoreResponse = response
            .into_json()
            .map_err(|e| Attempt::Fail(Error::ScorerProtocol(format!("malformed response body: {e}"))))?;
        if parsed.scores.len() != chunk.len() {
            return Err(Attempt::Fail(Error::ScorerProtocol(format!(
                "sent {} items but received {} scores",
                chunk.len(),
                parsed.scores.len()
            ))));
        }
        Ok(parsed.scores)
    }
}

struct CachedScorer {
    name: String,
    client: Arc<ScorerClient>,
    cache: Arc<ScoreCache>,
}

impl CachedScorer {
    fn item(&self, hyp: &str, pseudo_ref: &str, ctx: &UtilityContext<'_>) -> ScoreItem {
        ScoreItem {
            src: ctx.source.map(str::to_string),
            hyp: hyp.to_string(),
            reference: (self.client.endpoint.mode == ScorerMode::ReferenceBased).then(|| pseudo_ref.to_string()),
            context: ctx.context.map(<[String]>::to_vec),
        }
    }
}

impl Utility for CachedScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, hypothesis: &str, pseudo_reference: &str, ctx: &UtilityContext<'_>) -> Result<f64> {
        self.evaluate_pairs(&[(hypothesis, pseudo_reference)], ctx)
            .map(|v| v[0])
            .map_err(|f| f.error)
    }

    /// Looks every pair up in the cache first, then sends the distinct
    /// misses in one batched call and writes their scores through.
    fn evaluate_pairs(&self, pairs: &[(&str, &str)], ctx: &UtilityContext<'_>) -> Result<Vec<f64>, PairFailure> {
        let scorer = &self.client.endpoint.name;
        let items: Vec<ScoreItem> = pairs.iter().map(|(h, r)| self.item(h, r, ctx)).collect();
        let keys: Vec<String> = items.iter().map(|it| cache_key(scorer, it)).collect();
        let mut out: Vec<Option<f64>> = keys.iter().map(|k| self.cache.get(k)).collect();

        let mut miss_keys: Vec<&String> = Vec::new();
        let mut miss_items: Vec<ScoreItem> = Vec::new();
        let mut first_miss = None;
        let mut seen = std::collections::HashSet::new();
        for (i, key) in keys.iter().enumerate() {
            if out[i].is_none() {
                first_miss.get_or_insert(i);
                if seen.insert(key) {
                    miss_keys.push(key);
                    miss_items.push(items[i].clone());
                }
            }
        }
        if let Some(index) = first_miss {
            let scores = self.client.score_batch(&miss_items).map_err(|error| PairFailure { index, error })?;
            let fresh: std::collections::HashMap<&String, f64> = miss_keys.iter().copied().zip(scores.iter().copied()).collect();
            self.cache.insert_many(miss_keys.iter().map(|k| ((*k).clone(), fresh[*k])));
            for (slot, key) in out.iter_mut().zip(&keys) {
                if slot.is_none() {
                    *slot = Some(fresh[key]);
                }
            }
        }
        Ok(out.into_iter().map(|s| s.expect("every slot filled")).collect())
    }
}

/// Wraps a client as a utility that consults `cache` before the network.
pub fn cached_utility(client: Arc<ScorerClient>, cache: Arc<ScoreCache>) -> UtilityFunction {
    Arc::new(CachedScorer {
        name: format!("external:{}", client.endpoint.name),
        client,
        cache,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> Vec<ScoreItem> {
        (0..n)
            .map(|i| ScoreItem { src: None, hyp: format!("h{i}"), reference: Some(format!("r{i}")), context: None })
            .collect()
    }

    fn endpoint(url: &str, max_batch: usize) -> ScorerEndpoint {
        let mut e = ScorerEndpoint::new("mock", url, ScorerMode::ReferenceBased);
        e.max_batch = max_batch;
        e.backoff_ms = 1;
        e
    }

    #[test]
    fn empty_batch_sends_nothing() {
        let client = ScorerClient::new(endpoint("http://127.0.0.1:9", 4)).unwrap();
        assert!(client.score_batch(&[]).unwrap().is_empty());
        assert_eq!(client.request_count(), 0);
    }

    #[test]
    fn batches_split_at_max_batch() {
        let mock = MockScorer::start(MockBehavior::Hash).unwrap();
        let client = ScorerClient::new(endpoint(&mock.url(), 50)).unwrap();
        let its = items(120);
        let scores = client.score_batch(&its).unwrap();
        assert_eq!(client.request_count(), 3);
        assert_eq!(mock.request_count(), 3);
        for (s, it) in scores.iter().zip(&its) {
            assert_eq!(*s, mock_score(it));
        }
    }

    #[test]
    fn fixed_scores_are_echoed() {
        let mock = MockScorer::start(MockBehavior::Fixed(0.83)).unwrap();
        let client = ScorerClient::new(endpoint(&mock.url(), 8)).unwrap();
        assert_eq!(client.score_batch(&items(3)).unwrap(), vec![0.83; 3]);
    }

    #[test]
    fn transient_failures_are_retried() {
        let mock = MockScorer::start(MockBehavior::FailFirst(2)).unwrap();
        let client = ScorerClient::new(endpoint(&mock.url(), 8)).unwrap();
        assert_eq!(client.score_batch(&items(2)).unwrap().len(), 2);
        assert_eq!(client.request_count(), 3);
    }

    #[test]
    fn status_error_after_retries() {
        let mock = MockScorer::start(MockBehavior::FailFirst(usize::MAX)).unwrap();
        let client = ScorerClient::new(endpoint(&mock.url(), 8)).unwrap();
        match client.score_batch(&items(1)) {
            Err(Error::ScorerStatus { status, body }) => {
                assert_eq!(status, 503);
                assert!(body.contains("unavailable"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(client.request_count(), 3);
    }

    #[test]
    fn length_mismatch_is_a_protocol_error() {
        let mock = MockScorer::start(MockBehavior::DropLast).unwrap();
        let client = ScorerClient::new(endpoint(&mock.url(), 8)).unwrap();
        assert!(matches!(client.score_batch(&items(2)), Err(Error::ScorerProtocol(_))));
    }

    #[test]
    fn mode_checks() {
        let client = ScorerClient::new(endpoint("http://127.0.0.1:9", 4)).unwrap();
        let mut it = items(1);
        it[0].reference = None;
        assert!(matches!(client.score_batch(&it), Err(Error::InvalidArgument(_))));
        assert!(ScorerClient::new(endpoint("ftp://x", 1)).is_err());
        assert!(ScorerClient::new(endpoint("http://x", 0)).is_err());
    }

    #[test]
    fn cache_serves_repeats() {
        let mock = MockScorer::start(MockBehavior::Hash).unwrap();
        let client = Arc::new(ScorerClient::new(endpoint(&mock.url(), 8)).unwrap());
        let u = cached_utility(client.clone(), Arc::new(ScoreCache::in_memory()));
        let ctx = UtilityContext::default();
        let a = u.evaluate("hello", "world", &ctx).unwrap();
        let b = u.evaluate("hello", "world", &ctx).unwrap();
        assert_eq!(a, b);
        assert_eq!(client.request_count(), 1);
        // duplicates inside one call are scored once
        let v = u.evaluate_pairs(&[("x", "y"), ("x", "y"), ("hello", "world")], &ctx).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[2], a);
        assert_eq!(client.request_count(), 2);
        assert_eq!(mock.items_scored(), 2);
        assert_eq!(u.name(), "external:mock");
    }

    #[test]
    fn failed_batch_leaves_cache_untouched() {
        let mock = MockScorer::start(MockBehavior::DropLast).unwrap();
        let client = Arc::new(ScorerClient::new(endpoint(&mock.url(), 8)).unwrap());
        let cache = Arc::new(ScoreCache::in_memory());
        let u = cached_utility(client, cache.clone());
        let err = u.evaluate_pairs(&[("a", "b"), ("c", "d")], &UtilityContext::default()).unwrap_err();
        assert_eq!(err.index, 0);
        assert!(cache.is_empty());
    }
}
