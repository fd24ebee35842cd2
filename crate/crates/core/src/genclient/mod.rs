//! Text generation against a chat backend, record persistence, and answer
//! hygiene statistics.

mod hygiene;
mod mock;
mod openai;

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::persona::{PromptVariant, RenderedPrompt};

pub use hygiene::{analyze_hygiene, flag_rates, hygiene_rates, HygieneFlags, HygieneLexicons, HygieneRates};
pub use mock::{Cue, MockBackend, MockProfile};
pub use openai::OpenAiBackend;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum GenClientError {
    #[error("empty prompt batch")]
    EmptyBatch,
    #[error("backend unreachable: {failed} of {total} requests failed after retries; last error: {last_error}")]
    Unreachable {
        failed: usize,
        total: usize,
        last_error: String,
        /// Every record of the batch, failed ones carrying an error marker.
        records: Vec<GenerationRecord>,
        log: RunLog,
    },
    #[error("backend config: {0}")]
    Config(String),
    #[error("record schema version {found}, expected {RECORD_SCHEMA_VERSION} (line {line})")]
    SchemaVersion { line: usize, found: u32 },
    #[error("malformed record on line {line}: {source}")]
    Record { line: usize, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("protocol: {0}")]
    Protocol(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { code, .. } => *code == 429 || *code >= 500,
            BackendError::Protocol(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;
    async fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Openai,
}

/// Backend selection and sampling parameters, as read from run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_temperature() -> f64 {
    0.7
}
fn default_max_tokens() -> u32 {
    256
}
fn default_concurrency() -> usize {
    4
}
fn default_retries() -> u32 {
    2
}
fn default_backoff() -> u64 {
    250
}
fn default_timeout() -> u64 {
    60
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            base_url: None,
            api_key_env: default_key_env(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            concurrency: default_concurrency(),
            max_retries: default_retries(),
            retry_backoff_ms: default_backoff(),
            timeout_secs: default_timeout(),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GenClientError> {
        if self.concurrency == 0 {
            return Err(GenClientError::Config("concurrency must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GenClientError::Config(format!("temperature {} outside [0,2]", self.temperature)));
        }
        if self.kind == BackendKind::Openai && self.base_url.is_none() {
            return Err(GenClientError::Config("openai backend needs base_url".into()));
        }
        Ok(())
    }

    /// Builds the backend; the mock is seeded with `seed`, the HTTP client
    /// reads its token from `api_key_env` if set.
    pub fn build(&self, seed: u64) -> Result<Box<dyn ChatBackend>, GenClientError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Mock => Box::new(MockBackend::new(seed)),
            BackendKind::Openai => Box::new(OpenAiBackend::new(
                self.base_url.clone().unwrap_or_default(),
                std::env::var(&self.api_key_env).ok(),
                Duration::from_secs(self.timeout_secs),
            )?),
        })
    }
}

/// One generated answer. `raw_output` is verbatim up to trailing whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub schema_version: u32,
    pub respondent_id: String,
    pub wave_id: u32,
    pub variant: PromptVariant,
    pub model: String,
    pub prompt_text: String,
    pub raw_output: String,
    pub latency_ms: u64,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub hygiene: HygieneFlags,
}

impl GenerationRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Counters for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunLog {
    pub requests: usize,
    pub retries: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRun {
    pub records: Vec<GenerationRecord>,
    pub log: RunLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOptions {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub concurrency: usize,
    pub max_retries: u32,
    pub retry_backoff: Duration,
}

impl GenerationOptions {
    pub fn from_config(model: &str, cfg: &BackendConfig, seed: Option<u64>) -> Self {
        GenerationOptions {
            model: model.to_string(),
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            seed,
            concurrency: cfg.concurrency.max(1),
            max_retries: cfg.max_retries,
            retry_backoff: Duration::from_millis(cfg.retry_backoff_ms),
        }
    }
}

/// Sends every prompt, at most `concurrency` at a time, retrying retryable
/// failures with exponential backoff. Records come back in input order.
///
/// Requests that still fail are kept as records with an error marker. If any
/// of them failed at the transport level the whole batch is reported as
/// [`GenClientError::Unreachable`], which still carries all records.
pub async fn generate_batch(
    prompts: &[RenderedPrompt],
    backend: &dyn ChatBackend,
    opts: &GenerationOptions,
    lexicons: &HygieneLexicons,
) -> Result<GenerationRun, GenClientError> {
    if prompts.is_empty() {
        return Err(GenClientError::EmptyBatch);
    }
    let retries = Arc::new(AtomicUsize::new(0));
    let results: Vec<(GenerationRecord, Option<BackendError>)> = stream::iter(prompts)
        .map(|p| {
            let retries = Arc::clone(&retries);
            async move {
                let req = ChatRequest {
                    model: opts.model.clone(),
                    prompt: p.text.clone(),
                    temperature: opts.temperature,
                    max_tokens: opts.max_tokens,
                    seed: opts.seed,
                };
                let mut attempts = 0u32;
                let outcome = loop {
                    attempts += 1;
                    match backend.complete(&req).await {
                        Ok(c) => break Ok(c),
                        Err(e) if e.is_retryable() && attempts <= opts.max_retries => {
                            retries.fetch_add(1, Ordering::Relaxed);
                            tracing::warn!(respondent = %p.respondent_id, attempt = attempts, error = %e, "retrying");
                            let backoff = opts.retry_backoff.saturating_mul(1 << (attempts - 1).min(16));
                            tokio::time::sleep(backoff).await;
                        }
                        Err(e) => break Err(e),
                    }
                };
                let (raw, latency, err) = match outcome {
                    Ok(c) => (c.text.trim_end().to_string(), c.latency_ms, None),
                    Err(e) => (String::new(), 0, Some(e)),
                };
                let record = GenerationRecord {
                    schema_version: RECORD_SCHEMA_VERSION,
                    respondent_id: p.respondent_id.clone(),
                    wave_id: p.wave_id,
                    variant: p.variant,
                    model: opts.model.clone(),
                    prompt_text: p.text.clone(),
                    hygiene: analyze_hygiene(&raw, lexicons),
                    raw_output: raw,
                    latency_ms: latency,
                    attempts,
                    error: err.as_ref().map(ToString::to_string),
                };
                (record, err)
            }
        })
        .buffered(opts.concurrency.max(1))
        .collect()
        .await;

    let failures = results.iter().filter(|(_, e)| e.is_some()).count();
    let log = RunLog { requests: prompts.len(), retries: retries.load(Ordering::Relaxed), failures };
    let last_transport = results
        .iter()
        .rev()
        .find_map(|(_, e)| e.as_ref().filter(|e| matches!(e, BackendError::Transport(_))))
        .map(ToString::to_string);
    let records: Vec<GenerationRecord> = results.into_iter().map(|(r, _)| r).collect();
    if let Some(last_error) = last_transport {
        return Err(GenClientError::Unreachable { failed: failures, total: records.len(), last_error, records, log });
    }
    Ok(GenerationRun { records, log })
}

pub fn write_records<W: Write>(mut w: W, records: &[GenerationRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_records(path: impl AsRef<Path>, records: &[GenerationRecord]) -> Result<(), GenClientError> {
    let path = path.as_ref();
    let io = |e| GenClientError::Io { path: path.to_path_buf(), source: e };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    write_records(&mut f, records).map_err(io)?;
    f.flush().map_err(io)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<GenerationRecord>, GenClientError> {
    let path = path.as_ref();
    let io = |e| GenClientError::Io { path: path.to_path_buf(), source: e };
    let f = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| GenClientError::Record { line: i + 1, source: e })?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != RECORD_SCHEMA_VERSION {
            return Err(GenClientError::SchemaVersion { line: i + 1, found });
        }
        out.push(serde_json::from_value(value).map_err(|e| GenClientError::Record { line: i + 1, source: e })?);
    }
    Ok(out)
}
