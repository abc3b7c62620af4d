//! Machine translation with a persistent, append-only cache.
//!
//! Translation is pluggable behind [`TranslationClient`]: the shipped
//! implementations are an HTTP client for a commercial REST API
//! ([`HttpTranslationClient`]) and a file-backed fixture client
//! ([`FixtureClient`]) so every test runs offline. Results are memoized
//! in a [`TranslationCache`] — a JSON-lines file, one entry per line —
//! which makes the whole task-generation pipeline a deterministic
//! function of (source corpus, cache content).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from translation clients and the cache.
#[derive(Debug, Error)]
pub enum TranslateError {
    /// Offline (or clientless) operation hit texts absent from the cache.
    #[error("{} translation(s) missing from the cache: {}", .keys.len(), format_keys(.keys))]
    MissingTranslations { keys: Vec<String> },
    /// The request failed after all retries.
    #[error("translation request failed after {attempts} attempt(s): {message}")]
    RequestFailed { attempts: u32, message: String },
    /// The provider answered, but not in the shape we understand.
    #[error("unexpected translation response: {0}")]
    BadResponse(String),
    #[error("translation cache {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("translation cache {path} line {line}: {message}")]
    CacheParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn format_keys(keys: &[String]) -> String {
    const SHOW: usize = 5;
    let mut shown: Vec<&str> = keys.iter().take(SHOW).map(|s| s.as_str()).collect();
    let rest = keys.len().saturating_sub(SHOW);
    let mut out = shown.join("; ");
    if rest > 0 {
        shown.push("");
        out.push_str(&format!("; … and {rest} more"));
    }
    out
}

/// One cached translation. `src`/`src_lang`/`tgt_lang` form the lookup
/// key; `text` is the translation; `provider` and `ts` (Unix seconds)
/// record where and when it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCacheEntry {
    pub src: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub text: String,
    pub provider: String,
    pub ts: u64,
}

type Key = (String, String, String);

/// Something that can translate one sentence.
///
/// Implementations must be shareable across the worker threads that
/// issue concurrent requests.
pub trait TranslationClient: Send + Sync {
    /// Short tag recorded in cache entries (`google`, `fixture`, ...).
    fn provider(&self) -> &str;
    /// Translates `text` from `source_lang` to `target_lang`.
    fn translate(
        &self,
        text: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<String, TranslateError>;
}

#[derive(Debug)]
struct CacheState {
    map: HashMap<Key, TranslationCacheEntry>,
    /// Append handle, present when the cache is file-backed.
    appender: Option<BufWriter<File>>,
}

/// Exact-match, append-only translation memo.
///
/// Entries are never overwritten: the first translation stored for a key
/// wins, so identical inputs yield identical outputs for the life of the
/// cache file. Thread-safe; writes are serialized internally.
#[derive(Debug)]
pub struct TranslationCache {
    path: Option<PathBuf>,
    state: Mutex<CacheState>,
}

impl TranslationCache {
    /// A cache with no backing file (useful for tests and dry runs).
    pub fn in_memory() -> Self {
        TranslationCache {
            path: None,
            state: Mutex::new(CacheState {
                map: HashMap::new(),
                appender: None,
            }),
        }
    }

    /// Opens (or creates) a JSON-lines cache file and loads its entries.
    /// Duplicate keys in the file keep the earliest entry.
    pub fn open(path: &Path) -> Result<Self, TranslateError> {
        let map = if path.exists() {
            load_entries(path)?
        } else {
            HashMap::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| TranslateError::CacheIo {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(TranslationCache {
            path: Some(path.to_path_buf()),
            state: Mutex::new(CacheState {
                map,
                appender: Some(BufWriter::new(file)),
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock poisoned").map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, text: &str, source_lang: &str, target_lang: &str) -> Option<String> {
        let state = self.state.lock().expect("cache lock poisoned");
        state
            .map
            .get(&(
                text.to_string(),
                source_lang.to_string(),
                target_lang.to_string(),
            ))
            .map(|e| e.text.clone())
    }

    /// Stores an entry unless its key is already present (append-only:
    /// first write wins). File-backed caches append one JSON line.
    pub fn insert(&self, entry: TranslationCacheEntry) -> Result<(), TranslateError> {
        let mut state = self.state.lock().expect("cache lock poisoned");
        let key = (
            entry.src.clone(),
            entry.src_lang.clone(),
            entry.tgt_lang.clone(),
        );
        if state.map.contains_key(&key) {
            return Ok(());
        }
        if let Some(appender) = state.appender.as_mut() {
            let line = serde_json::to_string(&entry).expect("cache entry serializes");
            let path = self.path.clone().unwrap_or_default();
            appender
                .write_all(line.as_bytes())
                .and_then(|_| appender.write_all(b"\n"))
                .and_then(|_| appender.flush())
                .map_err(|source| TranslateError::CacheIo { path, source })?;
        }
        state.map.insert(key, entry);
        Ok(())
    }
}

fn load_entries(path: &Path) -> Result<HashMap<Key, TranslationCacheEntry>, TranslateError> {
    let file = File::open(path).map_err(|source| TranslateError::CacheIo {
        path: path.to_path_buf(),
        source,
    })?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TranslateError::CacheIo {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranslationCacheEntry =
            serde_json::from_str(&line).map_err(|e| TranslateError::CacheParse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        let key = (
            entry.src.clone(),
            entry.src_lang.clone(),
            entry.tgt_lang.clone(),
        );
        map.entry(key).or_insert(entry);
    }
    Ok(map)
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_secs()
}

/// Human-readable form of a cache key for error listings.
pub fn describe_key(text: &str, source_lang: &str, target_lang: &str) -> String {
    const MAX: usize = 60;
    let shown: String = if text.chars().count() > MAX {
        let cut: String = text.chars().take(MAX).collect();
        format!("{cut}…")
    } else {
        text.to_string()
    };
    format!("[{source_lang}→{target_lang}] {shown:?}")
}

/// File-backed mock client: translates by exact lookup in a fixture file
/// with the same JSON-lines schema as the cache.
pub struct FixtureClient {
    map: HashMap<Key, String>,
}

impl FixtureClient {
    pub fn from_file(path: &Path) -> Result<Self, TranslateError> {
        let entries = load_entries(path)?;
        Ok(FixtureClient {
            map: entries
                .into_iter()
                .map(|(k, e)| (k, e.text))
                .collect(),
        })
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = ((String, String, String), String)>,
    {
        FixtureClient {
            map: pairs.into_iter().collect(),
        }
    }
}

impl TranslationClient for FixtureClient {
    fn provider(&self) -> &str {
        "fixture"
    }

    fn translate(
        &self,
        text: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<String, TranslateError> {
        self.map
            .get(&(
                text.to_string(),
                source_lang.to_string(),
                target_lang.to_string(),
            ))
            .cloned()
            .ok_or_else(|| TranslateError::MissingTranslations {
                keys: vec![describe_key(text, source_lang, target_lang)],
            })
    }
}

/// HTTP client for a commercial translation REST API (request/response
/// shapes follow the common `v2`-style JSON contract: POST
/// `{q, source, target, format}` against `endpoint?key=…`, answer under
/// `data.translations[0].translatedText`).
pub struct HttpTranslationClient {
    endpoint: String,
    api_key: String,
    provider_tag: String,
    max_retries: u32,
    backoff: Duration,
    http: reqwest::blocking::Client,
}

impl HttpTranslationClient {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpTranslationClient {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            provider_tag: "google".to_string(),
            max_retries: 3,
            backoff: Duration::from_millis(250),
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("HTTP client construction cannot fail with static options"),
        }
    }

    pub fn with_provider_tag(mut self, tag: impl Into<String>) -> Self {
        self.provider_tag = tag.into();
        self
    }

    pub fn with_retry(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn attempt(
        &self,
        text: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<String, String> {
        let response = self
            .http
            .post(&self.endpoint)
            .query(&[("key", self.api_key.as_str())])
            .json(&serde_json::json!({
                "q": text,
                "source": source_lang,
                "target": target_lang,
                "format": "text",
            }))
            .send()
            .map_err(|e| e.to_string())?;

        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(format!("retryable status {status}"));
        }
        let body: serde_json::Value = response.json().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!("status {status}: {body}"));
        }
        body["data"]["translations"][0]["translatedText"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| format!("no translatedText in response: {body}"))
    }
}

impl TranslationClient for HttpTranslationClient {
    fn provider(&self) -> &str {
        &self.provider_tag
    }

    fn translate(
        &self,
        text: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<String, TranslateError> {
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(text, source_lang, target_lang) {
                Ok(t) => return Ok(t),
                Err(e) => {
                    log::warn!(
                        "translation attempt {}/{} failed: {e}",
                        attempt + 1,
                        self.max_retries + 1
                    );
                    last_error = e;
                }
            }
        }
        Err(TranslateError::RequestFailed {
            attempts: self.max_retries + 1,
            message: last_error,
        })
    }
}

/// Cache-through translation front end.
///
/// Looks up the cache first; on a miss, consults the client (unless
/// offline) and memoizes the answer. Batch translation fans requests out
/// over up to `max_concurrency` threads while keeping cache writes in
/// input order, so a rebuilt cache file is reproducible.
pub struct Translator<'a> {
    client: Option<&'a dyn TranslationClient>,
    cache: &'a TranslationCache,
    offline: bool,
    max_concurrency: usize,
}

impl<'a> Translator<'a> {
    pub fn new(client: Option<&'a dyn TranslationClient>, cache: &'a TranslationCache) -> Self {
        Translator {
            client,
            cache,
            offline: false,
            max_concurrency: 4,
        }
    }

    /// Forbids network access: only cache hits may answer.
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn with_concurrency(mut self, n: usize) -> Self {
        self.max_concurrency = n.max(1);
        self
    }

    pub fn is_offline(&self) -> bool {
        self.offline
    }

    /// Translates one sentence: cached answer if present, otherwise a
    /// client call whose result is stored for next time.
    pub fn translate(
        &self,
        text: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<String, TranslateError> {
        if let Some(hit) = self.cache.lookup(text, source_lang, target_lang) {
            return Ok(hit);
        }
        if self.offline || self.client.is_none() {
            return Err(TranslateError::MissingTranslations {
                keys: vec![describe_key(text, source_lang, target_lang)],
            });
        }
        let client = self.client.expect("checked above");
        let translated = client.translate(text, source_lang, target_lang)?;
        self.cache.insert(TranslationCacheEntry {
            src: text.to_string(),
            src_lang: source_lang.to_string(),
            tgt_lang: target_lang.to_string(),
            text: translated.clone(),
            provider: client.provider().to_string(),
            ts: now_unix(),
        })?;
        Ok(translated)
    }

    /// Translates many sentences, returning one result per input in
    /// order. Cache misses are fetched concurrently (bounded by
    /// `max_concurrency`) and then written to the cache in input order.
    pub fn translate_batch(
        &self,
        texts: &[&str],
        source_lang: &str,
        target_lang: &str,
    ) -> Vec<Result<String, TranslateError>> {
        let mut results: Vec<Option<Result<String, TranslateError>>> =
            texts.iter().map(|_| None).collect();

        let mut misses: Vec<usize> = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            match self.cache.lookup(text, source_lang, target_lang) {
                Some(hit) => results[i] = Some(Ok(hit)),
                None => misses.push(i),
            }
        }

        if misses.is_empty() {
            return results.into_iter().map(|r| r.expect("filled")).collect();
        }

        if self.offline || self.client.is_none() {
            for &i in &misses {
                results[i] = Some(Err(TranslateError::MissingTranslations {
                    keys: vec![describe_key(texts[i], source_lang, target_lang)],
                }));
            }
            return results.into_iter().map(|r| r.expect("filled")).collect();
        }
        let client = self.client.expect("checked above");

        // Fan out the misses; collect (index → result) without touching
        // the cache from worker threads.
        let fetched: Mutex<Vec<Option<Result<String, TranslateError>>>> =
            Mutex::new(misses.iter().map(|_| None).collect());
        let cursor = AtomicUsize::new(0);
        let workers = self.max_concurrency.min(misses.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let slot = cursor.fetch_add(1, Ordering::Relaxed);
                    if slot >= misses.len() {
                        break;
                    }
                    let text = texts[misses[slot]];
                    let outcome = client.translate(text, source_lang, target_lang);
                    fetched.lock().expect("result lock poisoned")[slot] = Some(outcome);
                });
            }
        });

        // Single-writer cache updates, in input order for reproducible
        // cache files.
        let fetched = fetched.into_inner().expect("result lock poisoned");
        for (slot, outcome) in misses.iter().zip(fetched) {
            let outcome = outcome.expect("worker filled every slot");
            let outcome = match outcome {
                Ok(translated) => self
                    .cache
                    .insert(TranslationCacheEntry {
                        src: texts[*slot].to_string(),
                        src_lang: source_lang.to_string(),
                        tgt_lang: target_lang.to_string(),
                        text: translated.clone(),
                        provider: client.provider().to_string(),
                        ts: now_unix(),
                    })
                    .map(|_| translated),
                Err(e) => Err(e),
            };
            results[*slot] = Some(outcome);
        }
        results.into_iter().map(|r| r.expect("filled")).collect()
    }
}
