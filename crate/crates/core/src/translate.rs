//! Chunk translation through a pluggable client, with a single-flight cache,
//! and prompt assembly.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::http::{with_retries, Failure, RetryPolicy};
use crate::lang::{LangCode, SourceLang};
use crate::text::{split_units, UnitKind};

pub const TRANSLATE_KEY_ENV: &str = "TRANSLATE_API_KEY";
pub const DEFAULT_TRANSLATE_ENDPOINT: &str = "https://translation.googleapis.com/language/translate/v2";
/// Joins prompt parts.
pub const SUFFIX_JOIN: &str = ", ";
pub const WHITE_BACKGROUND: &str = "on white background";

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("translation client error: {0}")]
    Client(String),
    #[error("no translation known for {0:?}")]
    UnknownText(String),
    #[error("translation request text is empty")]
    EmptyText,
    #[error("translation of {0:?} came back empty")]
    EmptyTranslation(String),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TranslationRequest {
    pub text: String,
    pub source: SourceLang,
    pub target: LangCode,
}

impl TranslationRequest {
    pub fn to_english(text: impl Into<String>, source: SourceLang) -> Self {
        Self { text: text.into(), source, target: LangCode::english() }
    }
}

pub trait TranslationClient: Send + Sync {
    fn translate(&self, text: &str, source: &SourceLang, target: &LangCode) -> Result<String, TranslateError>;

    /// Short identifier recorded in run manifests.
    fn name(&self) -> String;
}

type Slot = Arc<Mutex<Option<String>>>;

/// Append-only cache keyed by (source, target, text). Concurrent misses on
/// the same key wait for one client call instead of issuing their own.
#[derive(Default)]
pub struct TranslationCache {
    slots: Mutex<HashMap<TranslationRequest, Slot>>,
}

impl TranslationCache {
    fn slot(&self, req: &TranslationRequest) -> Slot {
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        slots.entry(req.clone()).or_default().clone()
    }

    pub fn get(&self, req: &TranslationRequest) -> Option<String> {
        let slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        slots.get(req).and_then(|s| s.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }

    pub fn len(&self) -> usize {
        let slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        slots.values().filter(|s| s.lock().unwrap_or_else(|e| e.into_inner()).is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct Translator {
    client: Arc<dyn TranslationClient>,
    cache: TranslationCache,
}

impl Translator {
    pub fn new(client: Arc<dyn TranslationClient>) -> Self {
        Self { client, cache: TranslationCache::default() }
    }

    pub fn client_name(&self) -> String {
        self.client.name()
    }

    pub fn cache(&self) -> &TranslationCache {
        &self.cache
    }

    pub fn translate(&self, req: &TranslationRequest) -> Result<String, TranslateError> {
        if req.text.trim().is_empty() {
            return Err(TranslateError::EmptyText);
        }
        if req.source.code() == Some(&req.target) {
            return Ok(req.text.clone());
        }
        let slot = self.cache.slot(req);
        let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = guard.as_ref() {
            return Ok(hit.clone());
        }
        let out = self.client.translate(&req.text, &req.source, &req.target)?;
        let out = out.trim().to_string();
        if out.is_empty() {
            return Err(TranslateError::EmptyTranslation(req.text.clone()));
        }
        *guard = Some(out.clone());
        Ok(out)
    }

    /// Translates every text concurrently (bounded by `workers`), keeping order.
    pub fn translate_all(
        &self,
        texts: &[String],
        source: &SourceLang,
        target: &LangCode,
        workers: usize,
    ) -> Vec<Result<String, TranslateError>> {
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<String, TranslateError>>>> =
            texts.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..workers.clamp(1, texts.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= texts.len() {
                        break;
                    }
                    let req =
                        TranslationRequest { text: texts[i].clone(), source: source.clone(), target: target.clone() };
                    *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(self.translate(&req));
                });
            }
        });
        results
            .into_iter()
            .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every index is visited"))
            .collect()
    }
}

fn append_part(mut prompt: String, part: Option<&str>) -> String {
    let Some(part) = part.map(str::trim).filter(|p| !p.is_empty()) else {
        return prompt;
    };
    if prompt.contains(part) {
        return prompt;
    }
    let kept = prompt.trim_end().trim_end_matches(['.', '。']).trim_end().len();
    prompt.truncate(kept);
    prompt.push_str(SUFFIX_JOIN);
    prompt.push_str(part);
    prompt
}

/// `translated`, then `, context_suffix`, then `, extra`; a part already
/// present verbatim is not appended again.
pub fn build_prompt(translated: &str, context_suffix: Option<&str>, extra: Option<&str>) -> String {
    let base = translated.trim().to_string();
    append_part(append_part(base, context_suffix), extra)
}

/// Offline client backed by a lookup table.
///
/// A text missing from the table is translated line by line, then sentence
/// by sentence; with `passthrough` set, unknown pieces are returned as-is.
pub struct MockTranslationClient {
    table: HashMap<String, String>,
    passthrough: bool,
    calls: AtomicUsize,
}

impl MockTranslationClient {
    pub fn new(table: HashMap<String, String>) -> Self {
        Self { table, passthrough: false, calls: AtomicUsize::new(0) }
    }

    pub fn identity() -> Self {
        Self::new(HashMap::new()).with_passthrough(true)
    }

    pub fn with_passthrough(mut self, passthrough: bool) -> Self {
        self.passthrough = passthrough;
        self
    }

    /// Loads a JSON object mapping source text to its translation.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, TranslateError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| TranslateError::Config(format!("{}: {e}", path.display())))?;
        let table: HashMap<String, String> =
            serde_json::from_slice(&bytes).map_err(|e| TranslateError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self::new(table))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn lookup(&self, text: &str) -> Option<String> {
        self.table.get(text.trim()).cloned()
    }

    fn piecewise(&self, text: &str) -> Result<String, TranslateError> {
        if let Some(hit) = self.lookup(text) {
            return Ok(hit);
        }
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let mut out_lines = Vec::with_capacity(lines.len());
        for line in lines {
            if let Some(hit) = self.lookup(line) {
                out_lines.push(hit);
                continue;
            }
            let mut parts = Vec::new();
            for sentence in split_units(line, UnitKind::Sentence) {
                match self.lookup(&sentence) {
                    Some(hit) => parts.push(hit),
                    None if self.passthrough => parts.push(sentence),
                    None => return Err(TranslateError::UnknownText(sentence)),
                }
            }
            out_lines.push(parts.join(" "));
        }
        Ok(out_lines.join("\n"))
    }
}

impl TranslationClient for MockTranslationClient {
    fn translate(&self, text: &str, _source: &SourceLang, _target: &LangCode) -> Result<String, TranslateError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.piecewise(text)
    }

    fn name(&self) -> String {
        "mock".into()
    }
}

/// Client for a Google-Translate-compatible v2 endpoint.
pub struct RemoteTranslationClient {
    endpoint: String,
    api_key: String,
    policy: RetryPolicy,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct TranslateResponse {
    data: TranslateData,
}

#[derive(Deserialize)]
struct TranslateData {
    translations: Vec<Translation>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Translation {
    translated_text: String,
}

impl RemoteTranslationClient {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Result<Self, TranslateError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| TranslateError::Config(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), api_key: api_key.into(), policy: RetryPolicy::default(), http })
    }

    /// Reads the key from `TRANSLATE_API_KEY`.
    pub fn from_env(endpoint: Option<&str>) -> Result<Self, TranslateError> {
        let key = std::env::var(TRANSLATE_KEY_ENV)
            .map_err(|_| TranslateError::Config(format!("{TRANSLATE_KEY_ENV} is not set")))?;
        Self::new(endpoint.unwrap_or(DEFAULT_TRANSLATE_ENDPOINT), key)
    }

    pub fn with_retry_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }
}

impl TranslationClient for RemoteTranslationClient {
    fn translate(&self, text: &str, source: &SourceLang, target: &LangCode) -> Result<String, TranslateError> {
        let mut body = json!({ "q": text, "target": target.as_str(), "format": "text" });
        if let Some(code) = source.code() {
            body["source"] = json!(code.as_str());
        }
        let resp = with_retries(&self.policy, || {
            self.http.post(&self.endpoint).query(&[("key", self.api_key.as_str())]).json(&body).send()
        })
        .map_err(|f| match f {
            Failure::Auth(m) => TranslateError::Client(format!("authentication failed: {m}")),
            Failure::RateLimited(m) => TranslateError::Client(format!("quota exceeded: {m}")),
            Failure::Server(m) | Failure::Client(m) | Failure::Network(m) => TranslateError::Client(m),
        })?;
        let parsed: TranslateResponse =
            resp.json().map_err(|e| TranslateError::Client(format!("bad response: {e}")))?;
        parsed
            .data
            .translations
            .into_iter()
            .next()
            .map(|t| t.translated_text)
            .ok_or_else(|| TranslateError::Client("response had no translations".into()))
    }

    fn name(&self) -> String {
        "google-translate-v2".into()
    }
}
