mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use fidelity_core::corpus::{Respondent, WaveTable};
use fidelity_core::genclient::{
    analyze_hygiene, generate_batch, hygiene_rates, load_records, save_records, BackendError,
    ChatBackend, ChatRequest, Completion, GenClientError, GenerationOptions, GenerationRecord,
    HygieneLexicons, MockBackend, OpenAiBackend, RECORD_SCHEMA_VERSION,
};
use fidelity_core::persona::{PromptRenderer, PromptVariant, RenderedPrompt};
use serde_json::{json, Value};

fn prompts(n: usize) -> Vec<RenderedPrompt> {
    (0..n)
        .map(|i| RenderedPrompt {
            respondent_id: format!("r{i}"),
            wave_id: 12,
            variant: PromptVariant::Base,
            text: format!("Prompt Nummer {i}"),
        })
        .collect()
}

fn opts(retries: u32) -> GenerationOptions {
    GenerationOptions {
        model: "test-model".into(),
        temperature: 0.7,
        max_tokens: 256,
        seed: Some(7),
        concurrency: 4,
        max_retries: retries,
        retry_backoff: Duration::from_millis(1),
    }
}

fn jsonl(records: &[GenerationRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    fidelity_core::genclient::write_records(&mut buf, records).unwrap();
    buf
}

#[tokio::test]
async fn mock_batch_is_byte_stable() {
    let lex = HygieneLexicons::builtin();
    let waves = WaveTable::builtin();
    let renderer = PromptRenderer::default();
    let r = Respondent {
        id: "x".into(),
        wave_id: 12,
        age: "45-59".parse().ok(),
        gender: "male".parse().ok(),
        leaning_party: "SPD".parse().ok(),
        region: "east".parse().ok(),
        education_degree: "Student".parse().ok(),
        vocational_degree: "University degree".parse().ok(),
        answer_text: None,
    };
    let ps: Vec<RenderedPrompt> = [PromptVariant::AllVars, PromptVariant::Base, PromptVariant::OneVar("region".parse().unwrap())]
        .iter()
        .map(|&v| renderer.render(&r, waves.get(12).unwrap(), v).unwrap())
        .collect();
    let a = generate_batch(&ps, &MockBackend::new(7), &opts(0), &lex).await.unwrap();
    let b = generate_batch(&ps, &MockBackend::new(7), &opts(0), &lex).await.unwrap();
    assert_eq!(a.records.len(), 3);
    assert_eq!(jsonl(&a.records), jsonl(&b.records));
    assert!(a.records.iter().all(|r| r.is_ok() && r.latency_ms == 0 && !r.raw_output.is_empty()));
    assert_eq!(a.records[2].respondent_id, "x");
}

#[tokio::test]
async fn empty_batch_is_rejected() {
    let err = generate_batch(&[], &MockBackend::new(1), &opts(0), &HygieneLexicons::builtin())
        .await
        .unwrap_err();
    assert!(matches!(err, GenClientError::EmptyBatch));
}

/// Answers after a per-prompt delay that decreases with the index, so later
/// prompts finish first.
struct Staggered;

#[async_trait]
impl ChatBackend for Staggered {
    fn name(&self) -> &str {
        "staggered"
    }
    async fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        let n: u64 = req.prompt.rsplit(' ').next().unwrap().parse().unwrap();
        tokio::time::sleep(Duration::from_millis(40 - 4 * n)).await;
        Ok(Completion { text: format!("Antwort {n}  \n"), latency_ms: 1 })
    }
}

#[tokio::test]
async fn output_order_follows_input_order() {
    let run = generate_batch(&prompts(8), &Staggered, &opts(0), &HygieneLexicons::builtin())
        .await
        .unwrap();
    let ids: Vec<_> = run.records.iter().map(|r| r.respondent_id.clone()).collect();
    assert_eq!(ids, (0..8).map(|i| format!("r{i}")).collect::<Vec<_>>());
    assert_eq!(run.records[3].raw_output, "Antwort 3");
}

fn completion_body(text: &str) -> Value {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]})
}

#[tokio::test]
async fn one_server_error_then_success_is_retried_once() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&calls);
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || {
            let counter = Arc::clone(&counter);
            async move {
                if counter.fetch_add(1, Ordering::SeqCst) == 0 {
                    (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "boom"})))
                } else {
                    (StatusCode::OK, Json(completion_body("Die Rente.")))
                }
            }
        }),
    );
    let url = common::spawn(app).await;
    let backend = OpenAiBackend::new(format!("{url}/v1"), None, Duration::from_secs(5)).unwrap();
    let run = generate_batch(&prompts(1), &backend, &opts(2), &HygieneLexicons::builtin())
        .await
        .unwrap();
    assert_eq!(run.records.len(), 1);
    assert!(run.records[0].is_ok());
    assert_eq!(run.records[0].raw_output, "Die Rente.");
    assert_eq!(run.records[0].attempts, 2);
    assert_eq!(run.log.retries, 1);
    assert_eq!(run.log.failures, 0);
    assert_eq!(calls.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn persistent_server_error_marks_record() {
    let app = Router::new().route(
        "/chat/completions",
        post(|| async { (StatusCode::SERVICE_UNAVAILABLE, "down") }),
    );
    let url = common::spawn(app).await;
    let backend = OpenAiBackend::new(url, None, Duration::from_secs(5)).unwrap();
    let run = generate_batch(&prompts(2), &backend, &opts(1), &HygieneLexicons::builtin())
        .await
        .unwrap();
    assert!(run.records.iter().all(|r| r.error.as_deref().unwrap().contains("503")));
    assert!(run.records.iter().all(|r| r.hygiene.is_non_response && r.attempts == 2));
    assert_eq!(run.log.failures, 2);
    assert_eq!(run.log.retries, 2);
}

/// Fails at the transport level for prompts whose number is odd.
struct HalfDown;

#[async_trait]
impl ChatBackend for HalfDown {
    fn name(&self) -> &str {
        "half-down"
    }
    async fn complete(&self, req: &ChatRequest) -> Result<Completion, BackendError> {
        let n: u32 = req.prompt.rsplit(' ').next().unwrap().parse().unwrap();
        if n % 2 == 1 {
            Err(BackendError::Transport("connection refused".into()))
        } else {
            Ok(Completion { text: "Klimawandel".into(), latency_ms: 0 })
        }
    }
}

#[tokio::test]
async fn unreachable_backend_returns_partial_results() {
    let err = generate_batch(&prompts(4), &HalfDown, &opts(2), &HygieneLexicons::builtin())
        .await
        .unwrap_err();
    match err {
        GenClientError::Unreachable { failed, total, records, log, .. } => {
            assert_eq!((failed, total), (2, 4));
            assert_eq!(records.iter().filter(|r| r.is_ok()).count(), 2);
            assert_eq!(log.retries, 4);
        }
        other => panic!("{other}"),
    }
}

#[tokio::test]
async fn real_socket_refusal_is_unreachable() {
    let backend = OpenAiBackend::new("http://127.0.0.1:9", None, Duration::from_secs(2)).unwrap();
    let err = generate_batch(&prompts(1), &backend, &opts(0), &HygieneLexicons::builtin())
        .await
        .unwrap_err();
    assert!(matches!(err, GenClientError::Unreachable { failed: 1, .. }), "{err}");
}

#[tokio::test]
async fn wire_format_has_model_messages_and_bearer() {
    let seen: Arc<Mutex<Option<(Value, Option<String>)>>> = Arc::default();
    let sink = Arc::clone(&seen);
    let app = Router::new().route(
        "/chat/completions",
        post(move |headers: HeaderMap, Json(body): Json<Value>| {
            let sink = Arc::clone(&sink);
            async move {
                let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_string());
                *sink.lock().unwrap() = Some((body, auth));
                Json(completion_body("Bildung"))
            }
        }),
    );
    let url = common::spawn(app).await;
    let backend = OpenAiBackend::new(url, Some("sekret".into()), Duration::from_secs(5)).unwrap();
    generate_batch(&prompts(1), &backend, &opts(0), &HygieneLexicons::builtin())
        .await
        .unwrap();
    let (body, auth) = seen.lock().unwrap().clone().unwrap();
    assert_eq!(auth.as_deref(), Some("Bearer sekret"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "Prompt Nummer 0");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["max_tokens"], 256);
    assert_eq!(body["seed"], 7);
}

fn record_with(text: &str) -> GenerationRecord {
    GenerationRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        respondent_id: "r".into(),
        wave_id: 12,
        variant: PromptVariant::AllVars,
        model: "m".into(),
        prompt_text: "p".into(),
        raw_output: text.into(),
        latency_ms: 0,
        attempts: 1,
        error: None,
        hygiene: analyze_hygiene(text, &HygieneLexicons::builtin()),
    }
}

#[test]
fn hygiene_rate_examples() {
    let clean: Vec<_> = (0..10).map(|_| record_with("Die Rente ist das Thema.")).collect();
    let r = hygiene_rates(&clean).unwrap();
    assert_eq!((r.covid, r.non_response, r.refusal, r.non_german, r.intro_phrase), (0.0, 0.0, 0.0, 0.0, 0.0));

    let mut mixed: Vec<_> = (0..42).map(|_| record_with("Corona")).collect();
    mixed.extend((0..58).map(|_| record_with("Klima")));
    assert!((hygiene_rates(&mixed).unwrap().covid - 0.42).abs() < 1e-12);

    let words = [record_with("zwei Wörter"), record_with("hier sind vier Wörter")];
    assert_eq!(hygiene_rates(&words).unwrap().avg_word_count, 3.0);

    assert!(matches!(hygiene_rates(&[]), Err(GenClientError::EmptyBatch)));
}

#[test]
fn records_roundtrip_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let mut recs = vec![record_with("Die Rente."), record_with("")];
    recs[1].error = Some("HTTP 500".into());
    save_records(&path, &recs).unwrap();
    assert_eq!(load_records(&path).unwrap(), recs);

    let text = std::fs::read_to_string(&path).unwrap().replace("\"schema_version\":1", "\"schema_version\":9");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(load_records(&path), Err(GenClientError::SchemaVersion { line: 1, found: 9 })));
}
