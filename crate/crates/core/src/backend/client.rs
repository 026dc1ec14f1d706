//! Completion-endpoint client: per-token logprobs of a given continuation,
//! and chat generation with the bundled prompts.
//!
//! Wire format (OpenAI-compatible):
//!
//! * `POST {base_url}/completions` with
//!   `{"model", "prompt": <rendered scoring prompt + translation>, "echo": true,
//!   "max_tokens": 1, "logprobs": 1, "temperature": 0.0}`. The response must carry
//!   `choices[0].logprobs.{tokens, token_logprobs, text_offset}`; offsets count
//!   Unicode scalar values from the start of the prompt string. Tokens whose
//!   offset falls inside the translation span are kept.
//! * `POST {base_url}/chat/completions` with
//!   `{"model", "messages": [{"role": "user", "content": <rendered prompt>}], "temperature": 0.0}`,
//!   reading `choices[0].message.content`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::dump::TokenScores;
use super::prompts::{default_scoring_template, GenerationPrompt};
use crate::corpus::PromptTemplate;
use crate::error::ErrorClass;
use crate::rng::{fnv1a64, XorShift64Star};

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    /// Base URL up to and including the API version, e.g. `http://host:8000/v1`.
    pub base_url: String,
    pub model_id: String,
    pub max_parallel: usize,
    pub timeout: Duration,
    pub retries: u32,
    /// First retry delay; doubles per attempt, scaled by a jitter in [0.5, 1).
    pub backoff_base: Duration,
    pub api_key: Option<String>,
}

impl BackendConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_id: model_id.into(),
            max_parallel: 4,
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff_base: Duration::from_millis(500),
            api_key: None,
        }
    }

    fn endpoint(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status} after {attempts} attempt(s): {body}")]
    Status { status: u16, attempts: u32, body: String },
    #[error("endpoint capability missing: {0}")]
    Capability(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("empty completion")]
    EmptyCompletion,
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl BackendError {
    pub fn class(&self) -> ErrorClass {
        match self {
            BackendError::Capability(_) => ErrorClass::Capability,
            BackendError::Transport { .. } | BackendError::Status { .. } | BackendError::Cache(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Something that can POST JSON. Injected so tests can observe and fake the
/// network.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        body: &Value,
        api_key: Option<&str>,
        timeout: Duration,
    ) -> Result<HttpResponse, String>;
}

#[cfg(feature = "http")]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

#[cfg(feature = "http")]
impl HttpTransport {
    pub fn new() -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder().build().map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { client })
    }
}

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        body: &Value,
        api_key: Option<&str>,
        timeout: Duration,
    ) -> Result<HttpResponse, String> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(k) = api_key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Logprob cache keyed by model id and a content hash of the scored text.
/// Optionally mirrored to a directory (one JSON file per key) so it survives
/// restarts. Concurrent writers of the same key store identical values.
#[derive(Debug, Default)]
pub struct LogprobCache {
    mem: RwLock<HashMap<String, TokenScores>>,
    dir: Option<PathBuf>,
}

impl LogprobCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: PathBuf) -> std::io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { mem: RwLock::default(), dir: Some(dir) })
    }

    pub fn key(model_id: &str, prompt: &str, translation: &str) -> String {
        let mut h = Sha256::new();
        for part in [model_id, prompt, translation] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn get(&self, key: &str) -> Option<TokenScores> {
        if let Some(v) = self.mem.read().expect("cache lock").get(key) {
            return Some(v.clone());
        }
        let path = self.dir.as_ref()?.join(format!("{key}.json"));
        let text = std::fs::read_to_string(path).ok()?;
        let v: TokenScores = serde_json::from_str(&text).ok()?;
        v.validate().ok()?;
        self.mem.write().expect("cache lock").insert(key.to_string(), v.clone());
        Some(v)
    }

    pub fn put(&self, key: &str, value: &TokenScores) -> std::io::Result<()> {
        self.mem.write().expect("cache lock").insert(key.to_string(), value.clone());
        if let Some(dir) = &self.dir {
            let tmp = dir.join(format!("{key}.{}.{:?}.tmp", std::process::id(), std::thread::current().id()));
            std::fs::write(&tmp, serde_json::to_vec(value)?)?;
            std::fs::rename(tmp, dir.join(format!("{key}.json")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mem.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One sample to score remotely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchItem {
    pub sample_id: String,
    pub source: String,
    pub translation: String,
}

pub struct BackendClient {
    config: BackendConfig,
    transport: Arc<dyn Transport>,
    cache: Arc<LogprobCache>,
    scoring_template: PromptTemplate,
}

impl BackendClient {
    pub fn new(config: BackendConfig, transport: Arc<dyn Transport>) -> Result<Self, BackendError> {
        if config.max_parallel == 0 {
            return Err(BackendError::Config("max_parallel must be at least 1".into()));
        }
        Ok(Self {
            config,
            transport,
            cache: Arc::new(LogprobCache::in_memory()),
            scoring_template: default_scoring_template(),
        })
    }

    #[cfg(feature = "http")]
    pub fn http(config: BackendConfig) -> Result<Self, BackendError> {
        Self::new(config, Arc::new(HttpTransport::new()?))
    }

    pub fn with_cache(mut self, cache: Arc<LogprobCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_scoring_template(mut self, template: PromptTemplate) -> Self {
        self.scoring_template = template;
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn cache(&self) -> &LogprobCache {
        &self.cache
    }

    fn backoff(&self, seed: u64, attempt: u32) -> Duration {
        let base = self.config.backoff_base.as_secs_f64() * f64::from(1u32 << attempt.min(16));
        let jitter = 0.5 + 0.5 * XorShift64Star::new(seed ^ u64::from(attempt)).next_f64();
        Duration::from_secs_f64(base * jitter)
    }

    /// POST with retries on transport failures, 408, 429 and 5xx.
    fn post_with_retry(&self, url: &str, body: &Value, seed: u64) -> Result<Value, BackendError> {
        let attempts = self.config.retries + 1;
        let mut last: Option<BackendError> = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(seed, attempt - 1));
            }
            let resp = self.transport.post_json(url, body, self.config.api_key.as_deref(), self.config.timeout);
            match resp {
                Err(message) => {
                    last = Some(BackendError::Transport { attempts: attempt + 1, message });
                }
                Ok(r) if (200..300).contains(&r.status) => {
                    return serde_json::from_str(&r.body)
                        .map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}")));
                }
                Ok(r) => {
                    let retryable = r.status == 408 || r.status == 429 || r.status >= 500;
                    let err = BackendError::Status { status: r.status, attempts: attempt + 1, body: r.body };
                    if !retryable {
                        return Err(err);
                    }
                    last = Some(err);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Per-token logprobs of `translation` given the source under the
    /// scoring template. Cached by model id and content.
    pub fn fetch_logprobs(
        &self,
        sample_id: &str,
        source: &str,
        translation: &str,
    ) -> Result<TokenScores, BackendError> {
        let prompt = self.scoring_template.render(source);
        let key = LogprobCache::key(&self.config.model_id, &prompt, translation);
        if let Some(mut hit) = self.cache.get(&key) {
            hit.sample_id = sample_id.to_string();
            return Ok(hit);
        }
        let full = format!("{prompt}{translation}");
        let body = json!({
            "model": self.config.model_id,
            "prompt": full,
            "echo": true,
            "max_tokens": 1,
            "logprobs": 1,
            "temperature": 0.0,
        });
        let resp = self.post_with_retry(&self.config.endpoint("completions"), &body, fnv1a64(key.as_bytes()))?;
        let start = prompt.chars().count();
        let end = start + translation.chars().count();
        let logprobs = extract_span_logprobs(&resp, start, end)?;
        let scores = TokenScores::from_logprobs(sample_id, &self.config.model_id, logprobs);
        scores.validate().map_err(|v| BackendError::Protocol(format!("endpoint returned invalid scores: {v}")))?;
        self.cache.put(&key, &scores)?;
        Ok(scores)
    }

    /// Fetches many samples with at most `max_parallel` requests in flight.
    /// Results are in input order regardless of completion order.
    pub fn fetch_batch(&self, items: &[FetchItem]) -> Vec<Result<TokenScores, BackendError>> {
        let workers = self.config.max_parallel.min(items.len()).max(1);
        let next = AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<TokenScores, BackendError>>> = (0..items.len()).map(|_| None).collect();
        let results = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= items.len() {
                        break;
                    }
                    let it = &items[i];
                    let r = self.fetch_logprobs(&it.sample_id, &it.source, &it.translation);
                    results.lock().expect("result lock")[i] = Some(r);
                });
            }
        });
        slots.into_iter().map(|r| r.expect("every slot filled")).collect()
    }

    /// Raw chat completion for `prompt` applied to `source`.
    pub fn generate_translation(&self, prompt: &GenerationPrompt, source: &str) -> Result<String, BackendError> {
        let content = prompt.render(source);
        let body = json!({
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": content}],
            "temperature": 0.0,
        });
        let seed = fnv1a64(content.as_bytes());
        let resp = self.post_with_retry(&self.config.endpoint("chat/completions"), &body, seed)?;
        let text = resp
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))?;
        if text.trim().is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(text.to_string())
    }
}

/// Pulls the logprobs of tokens starting inside `[start, end)` (character
/// offsets) out of a completions response.
fn extract_span_logprobs(resp: &Value, start: usize, end: usize) -> Result<Vec<f64>, BackendError> {
    let lp = resp.pointer("/choices/0/logprobs");
    let lp = match lp {
        Some(v) if !v.is_null() => v,
        _ => {
            return Err(BackendError::Capability(
                "response has no logprobs; the endpoint must support echo with logprobs".into(),
            ))
        }
    };
    let offsets = lp
        .get("text_offset")
        .and_then(Value::as_array)
        .ok_or_else(|| BackendError::Capability("logprobs.text_offset missing".into()))?;
    let values = lp
        .get("token_logprobs")
        .and_then(Value::as_array)
        .ok_or_else(|| BackendError::Capability("logprobs.token_logprobs missing".into()))?;
    if offsets.len() != values.len() {
        return Err(BackendError::Protocol(format!(
            "text_offset has {} entries, token_logprobs {}",
            offsets.len(),
            values.len()
        )));
    }
    let mut out = Vec::new();
    for (off, v) in offsets.iter().zip(values) {
        let off = off.as_u64().ok_or_else(|| BackendError::Protocol("non-integer text_offset".into()))? as usize;
        if off < start || off >= end {
            continue;
        }
        let lp = v
            .as_f64()
            .ok_or_else(|| BackendError::Capability(format!("null logprob for continuation token at offset {off}")))?;
        out.push(lp);
    }
    if out.is_empty() {
        return Err(BackendError::Protocol("no tokens inside the translation span".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Scripted transport that records every call.
    struct Scripted {
        calls: AtomicUsize,
        reply: Box<dyn Fn(&Value) -> Result<HttpResponse, String> + Send + Sync>,
        seen: Mutex<Vec<Value>>,
    }

    impl Scripted {
        fn new(reply: impl Fn(&Value) -> Result<HttpResponse, String> + Send + Sync + 'static) -> Arc<Self> {
            Arc::new(Self { calls: AtomicUsize::new(0), reply: Box::new(reply), seen: Mutex::new(Vec::new()) })
        }
    }

    impl Transport for Scripted {
        fn post_json(&self, _: &str, body: &Value, _: Option<&str>, _: Duration) -> Result<HttpResponse, String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.seen.lock().unwrap().push(body.clone());
            (self.reply)(body)
        }
    }

    fn ok(v: Value) -> Result<HttpResponse, String> {
        Ok(HttpResponse { status: 200, body: v.to_string() })
    }

    /// Character-level echo: one token per character with logprob −0.5,
    /// null for the first prompt character.
    fn echo_reply(body: &Value) -> Result<HttpResponse, String> {
        let prompt = body["prompt"].as_str().unwrap();
        let n = prompt.chars().count();
        let offsets: Vec<usize> = (0..n).collect();
        let lps: Vec<Value> = (0..n).map(|i| if i == 0 { Value::Null } else { json!(-0.5) }).collect();
        ok(json!({"choices": [{"logprobs": {"tokens": [], "text_offset": offsets, "token_logprobs": lps}}]}))
    }

    fn config() -> BackendConfig {
        BackendConfig { backoff_base: Duration::ZERO, ..BackendConfig::new("http://mock/v1", "m") }
    }

    #[test]
    fn span_extraction_and_cache() {
        let t = Scripted::new(echo_reply);
        let c = BackendClient::new(config(), t.clone()).unwrap();
        let s = c.fetch_logprobs("a", "src", "你好吗").unwrap();
        assert_eq!(s.n_tokens, 3);
        assert_eq!(s.token_logprobs, vec![-0.5; 3]);
        let again = c.fetch_logprobs("b", "src", "你好吗").unwrap();
        assert_eq!(again.sample_id, "b");
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
        let body = &t.seen.lock().unwrap()[0];
        assert_eq!(body["echo"], json!(true));
        assert_eq!(body["model"], json!("m"));
    }

    #[test]
    fn retries_then_fails() {
        let t = Scripted::new(|_| Ok(HttpResponse { status: 500, body: "boom".into() }));
        let c = BackendClient::new(BackendConfig { retries: 2, ..config() }, t.clone()).unwrap();
        let err = c.fetch_logprobs("a", "s", "t").unwrap_err();
        assert!(matches!(err, BackendError::Status { status: 500, attempts: 3, .. }));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
        assert_eq!(err.class(), ErrorClass::Io);
    }

    #[test]
    fn client_errors_not_retried() {
        let t = Scripted::new(|_| Ok(HttpResponse { status: 404, body: "no".into() }));
        let c = BackendClient::new(BackendConfig { retries: 5, ..config() }, t.clone()).unwrap();
        assert!(c.fetch_logprobs("a", "s", "t").is_err());
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn missing_logprobs_is_capability_error() {
        let t = Scripted::new(|_| ok(json!({"choices": [{"text": "x", "logprobs": null}]})));
        let c = BackendClient::new(config(), t).unwrap();
        let err = c.fetch_logprobs("a", "s", "t").unwrap_err();
        assert_eq!(err.class(), ErrorClass::Capability);
    }

    #[test]
    fn batch_order_independent_of_parallelism() {
        let items: Vec<FetchItem> = (0..20)
            .map(|i| FetchItem {
                sample_id: format!("s{i}"),
                source: format!("source {i}"),
                translation: "x".repeat(i + 1),
            })
            .collect();
        let run = |p: usize| {
            let c =
                BackendClient::new(BackendConfig { max_parallel: p, ..config() }, Scripted::new(echo_reply)).unwrap();
            c.fetch_batch(&items).into_iter().map(Result::unwrap).collect::<Vec<_>>()
        };
        let one = run(1);
        let eight = run(8);
        assert_eq!(one, eight);
        assert_eq!(one[4].n_tokens, 5);
        assert_eq!(one[4].sample_id, "s4");
    }

    #[test]
    fn generation_and_empty_completion() {
        let t = Scripted::new(|b| {
            let content = b["messages"][0]["content"].as_str().unwrap().to_string();
            ok(json!({"choices": [{"message": {"role": "assistant", "content": content}}]}))
        });
        let c = BackendClient::new(config(), t).unwrap();
        let p = GenerationPrompt::bundled(super::super::PromptKind::Vanilla);
        assert_eq!(c.generate_translation(&p, "hi").unwrap(), p.render("hi"));

        let empty = Scripted::new(|_| ok(json!({"choices": [{"message": {"content": "  "}}]})));
        let c = BackendClient::new(config(), empty).unwrap();
        assert!(matches!(c.generate_translation(&p, "hi"), Err(BackendError::EmptyCompletion)));
    }

    #[test]
    fn disk_cache_survives_new_instance() {
        let dir = tempfile::tempdir().unwrap();
        let t = Scripted::new(echo_reply);
        let cache = Arc::new(LogprobCache::with_dir(dir.path().to_path_buf()).unwrap());
        let c = BackendClient::new(config(), t.clone()).unwrap().with_cache(cache);
        c.fetch_logprobs("a", "s", "abc").unwrap();
        let fresh = Arc::new(LogprobCache::with_dir(dir.path().to_path_buf()).unwrap());
        let c2 = BackendClient::new(config(), t.clone()).unwrap().with_cache(fresh);
        c2.fetch_logprobs("a", "s", "abc").unwrap();
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn zero_parallel_rejected() {
        let r = BackendClient::new(BackendConfig { max_parallel: 0, ..config() }, Scripted::new(echo_reply));
        assert!(matches!(r, Err(BackendError::Config(_))));
    }
}
