//! HTTP adapters for the two backend wire contracts.
//!
//! Embedding service:  `POST /embed` with `{"texts": [...]}` →
//! `{"dimension": n, "vectors": [[...], ...]}`.
//!
//! Choice scorer:  `POST /score_choices` with `{"prompts": [...]}` →
//! `{"logits": [[a, b, c, d], ...]}` aligned to the prompts.
//!
//! Both requests are idempotent by construction, so transport failures
//! and non-200 responses are retried with exponential backoff; a
//! malformed 200 body fails immediately.

use std::sync::OnceLock;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{ChoiceLogits, ChoiceScorer};
use crate::prompting::Prompt;
use crate::semantic::{EmbeddingProvider, EmbeddingVector};

/// Bounded-retry policy: `max_retries` extra attempts after the first,
/// sleeping `base_backoff · 2^attempt` between attempts.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_backoff: Duration::from_millis(200),
        }
    }
}

const REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

fn http_client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(REQUEST_TIMEOUT)
        .build()
        .expect("http client")
}

/// POST `body` as JSON and decode the JSON response, retrying transport
/// failures and non-200 statuses per `retry`. Returns a message on
/// failure; the caller wraps it in its unavailable-variant.
fn post_json<Req: Serialize, Resp: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &Req,
    retry: RetryPolicy,
) -> std::result::Result<Resp, String> {
    let mut last_failure = String::new();
    for attempt in 0..=retry.max_retries {
        if attempt > 0 {
            std::thread::sleep(retry.base_backoff * 2u32.pow(attempt - 1));
        }
        match client.post(url).json(body).send() {
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    // A 200 with an undecodable body is a contract bug,
                    // not a transient fault: fail without retrying.
                    return response
                        .json::<Resp>()
                        .map_err(|e| format!("malformed response body from {url}: {e}"));
                }
                last_failure = format!("{url} returned status {status}");
            }
            Err(e) => last_failure = format!("request to {url} failed: {e}"),
        }
    }
    Err(format!(
        "{last_failure} (after {} attempts)",
        retry.max_retries + 1
    ))
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dimension: usize,
    vectors: Vec<Vec<f64>>,
}

/// Embedding provider backed by an HTTP service.
///
/// The service declares its dimension in every response; the first one
/// seen is pinned and later responses must agree.
pub struct HttpEmbedder {
    url: String,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    pinned_dimension: OnceLock<usize>,
}

impl HttpEmbedder {
    /// `base_url` is the service root; the `/embed` route is appended.
    pub fn new(base_url: &str) -> Self {
        Self {
            url: format!("{}/embed", base_url.trim_end_matches('/')),
            client: http_client(),
            retry: RetryPolicy::default(),
            pinned_dimension: OnceLock::new(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        "http-embedder"
    }

    fn declared_dimension(&self) -> Option<usize> {
        self.pinned_dimension.get().copied()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let response: EmbedResponse =
            post_json(&self.client, &self.url, &EmbedRequest { texts }, self.retry)
                .map_err(|message| Error::ProviderUnavailable { message })?;

        if response.vectors.len() != texts.len() {
            return Err(Error::ProviderUnavailable {
                message: format!(
                    "{} returned {} vectors for {} texts",
                    self.url,
                    response.vectors.len(),
                    texts.len()
                ),
            });
        }
        let expected = *self.pinned_dimension.get_or_init(|| response.dimension);
        if response.dimension != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: response.dimension,
            });
        }
        response
            .vectors
            .into_iter()
            .map(|values| {
                if values.len() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        got: values.len(),
                    });
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::ProviderUnavailable {
                        message: format!("{} returned a non-finite component", self.url),
                    });
                }
                Ok(EmbeddingVector::new(values))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    prompts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    logits: Vec<Vec<f64>>,
}

/// Choice scorer backed by an HTTP service. Only the rendered prompt
/// text crosses the wire; the service must return one `[a, b, c, d]`
/// row per prompt, in order.
pub struct HttpChoiceScorer {
    url: String,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
}

impl HttpChoiceScorer {
    /// `base_url` is the service root; the `/score_choices` route is appended.
    pub fn new(base_url: &str) -> Self {
        Self {
            url: format!("{}/score_choices", base_url.trim_end_matches('/')),
            client: http_client(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl ChoiceScorer for HttpChoiceScorer {
    fn name(&self) -> &str {
        "http-choice-scorer"
    }

    fn score_batch(&self, prompts: &[Prompt]) -> Result<Vec<ChoiceLogits>> {
        let question_ids = || prompts.iter().map(|p| p.question_id.clone()).collect();
        let request = ScoreRequest {
            prompts: prompts.iter().map(|p| p.text.as_str()).collect(),
        };
        let response: ScoreResponse = post_json(&self.client, &self.url, &request, self.retry)
            .map_err(|message| Error::ScorerUnavailable {
                message,
                question_ids: question_ids(),
            })?;

        if response.logits.len() != prompts.len() {
            return Err(Error::ScorerUnavailable {
                message: format!(
                    "{} returned {} logit rows for {} prompts",
                    self.url,
                    response.logits.len(),
                    prompts.len()
                ),
                question_ids: question_ids(),
            });
        }
        prompts
            .iter()
            .zip(response.logits)
            .map(|(prompt, row)| {
                let values: [f64; 4] = row.try_into().map_err(|row: Vec<f64>| {
                    Error::ScorerUnavailable {
                        message: format!(
                            "{} returned a row of {} logits, expected 4",
                            self.url,
                            row.len()
                        ),
                        question_ids: question_ids(),
                    }
                })?;
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteLogit {
                        question_id: prompt.question_id.clone(),
                    });
                }
                Ok(ChoiceLogits {
                    question_id: prompt.question_id.clone(),
                    logits: values,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Minimal single-threaded HTTP/1.1 test server: serves one scripted
    /// response per connection, records request bodies, then stops
    /// listening.
    fn spawn_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let seen = Arc::clone(&bodies);
        std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((mut stream, _)) = listener.accept() else {
                    return;
                };
                let mut buf = Vec::new();
                let mut chunk = [0u8; 1024];
                let header_end = loop {
                    let n = stream.read(&mut chunk).unwrap();
                    if n == 0 {
                        break None;
                    }
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        break Some(pos + 4);
                    }
                };
                let Some(header_end) = header_end else { continue };
                let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                let content_length: usize = headers
                    .lines()
                    .find_map(|l| {
                        let (name, value) = l.split_once(':')?;
                        name.eq_ignore_ascii_case("content-length")
                            .then(|| value.trim().parse().ok())?
                    })
                    .unwrap_or(0);
                while buf.len() < header_end + content_length {
                    let n = stream.read(&mut chunk).unwrap();
                    if n == 0 {
                        break;
                    }
                    buf.extend_from_slice(&chunk[..n]);
                }
                seen.lock()
                    .unwrap()
                    .push(String::from_utf8_lossy(&buf[header_end..]).to_string());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (url, bodies)
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            max_retries: 3,
            base_backoff: Duration::from_millis(1),
        }
    }

    fn texts(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn embedder_round_trips_the_wire_contract() {
        let (url, bodies) = spawn_server(vec![(
            200,
            r#"{"dimension":2,"vectors":[[1.0,0.0],[0.5,0.5]]}"#.into(),
        )]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        let got = embedder.embed_batch(&texts(&["a", "b"])).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].values(), [1.0, 0.0]);
        assert_eq!(got[1].values(), [0.5, 0.5]);
        assert_eq!(embedder.declared_dimension(), Some(2));

        let sent: serde_json::Value =
            serde_json::from_str(&bodies.lock().unwrap()[0]).unwrap();
        assert_eq!(sent, serde_json::json!({"texts": ["a", "b"]}));
    }

    #[test]
    fn transient_failures_are_retried_until_success() {
        let (url, bodies) = spawn_server(vec![
            (500, "{}".into()),
            (503, "{}".into()),
            (200, r#"{"dimension":1,"vectors":[[0.25]]}"#.into()),
        ]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        let got = embedder.embed_batch(&texts(&["a"])).unwrap();
        assert_eq!(got[0].values(), [0.25]);
        assert_eq!(bodies.lock().unwrap().len(), 3);
    }

    #[test]
    fn exhausted_retries_surface_provider_unavailable() {
        let (url, bodies) = spawn_server(vec![
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
        ]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        match embedder.embed_batch(&texts(&["a"])) {
            Err(Error::ProviderUnavailable { message }) => {
                assert!(message.contains("after 4 attempts"), "{message}");
            }
            other => panic!("expected ProviderUnavailable, got {other:?}"),
        }
        assert_eq!(bodies.lock().unwrap().len(), 4);
    }

    #[test]
    fn malformed_success_body_fails_without_retry() {
        let (url, bodies) = spawn_server(vec![(200, "not json".into())]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        assert!(matches!(
            embedder.embed_batch(&texts(&["a"])),
            Err(Error::ProviderUnavailable { .. })
        ));
        assert_eq!(bodies.lock().unwrap().len(), 1);
    }

    #[test]
    fn miscounted_vectors_are_rejected() {
        let (url, _) = spawn_server(vec![(200, r#"{"dimension":1,"vectors":[[1.0]]}"#.into())]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        assert!(matches!(
            embedder.embed_batch(&texts(&["a", "b"])),
            Err(Error::ProviderUnavailable { .. })
        ));
    }

    #[test]
    fn vector_shorter_than_declared_dimension_is_rejected() {
        let (url, _) = spawn_server(vec![(
            200,
            r#"{"dimension":3,"vectors":[[1.0,0.0]]}"#.into(),
        )]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        assert!(matches!(
            embedder.embed_batch(&texts(&["a"])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn dimension_changing_between_calls_is_rejected() {
        let (url, _) = spawn_server(vec![
            (200, r#"{"dimension":2,"vectors":[[1.0,0.0]]}"#.into()),
            (200, r#"{"dimension":3,"vectors":[[1.0,0.0,0.0]]}"#.into()),
        ]);
        let embedder = HttpEmbedder::new(&url).with_retry(fast_retry());
        embedder.embed_batch(&texts(&["a"])).unwrap();
        assert!(matches!(
            embedder.embed_batch(&texts(&["b"])),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    fn prompt(id: &str, text: &str) -> Prompt {
        Prompt {
            text: text.into(),
            question_id: id.into(),
            parametric_fallback: false,
            evidence_count: 1,
            evidence_texts: vec!["ev".into()],
            choices: ["a".into(), "b".into(), "c".into(), "d".into()],
        }
    }

    #[test]
    fn scorer_round_trips_the_wire_contract() {
        let (url, bodies) = spawn_server(vec![(
            200,
            r#"{"logits":[[0.1,2.3,-1.0,0.0],[4.0,0.0,0.0,0.0]]}"#.into(),
        )]);
        let scorer = HttpChoiceScorer::new(&url).with_retry(fast_retry());
        let got = scorer
            .score_batch(&[prompt("q1", "first prompt"), prompt("q2", "second prompt")])
            .unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].question_id, "q1");
        assert_eq!(got[0].logits, [0.1, 2.3, -1.0, 0.0]);
        assert_eq!(got[1].logits, [4.0, 0.0, 0.0, 0.0]);

        let sent: serde_json::Value =
            serde_json::from_str(&bodies.lock().unwrap()[0]).unwrap();
        assert_eq!(
            sent,
            serde_json::json!({"prompts": ["first prompt", "second prompt"]})
        );
    }

    #[test]
    fn scorer_failure_carries_the_question_ids() {
        let (url, _) = spawn_server(vec![
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
        ]);
        let scorer = HttpChoiceScorer::new(&url).with_retry(fast_retry());
        match scorer.score_batch(&[prompt("q1", "p1"), prompt("q2", "p2")]) {
            Err(Error::ScorerUnavailable { question_ids, .. }) => {
                assert_eq!(question_ids, ["q1", "q2"]);
            }
            other => panic!("expected ScorerUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn misaligned_logit_rows_are_rejected() {
        let (url, _) = spawn_server(vec![(200, r#"{"logits":[[1.0,0.0,0.0,0.0]]}"#.into())]);
        let scorer = HttpChoiceScorer::new(&url).with_retry(fast_retry());
        assert!(matches!(
            scorer.score_batch(&[prompt("q1", "p1"), prompt("q2", "p2")]),
            Err(Error::ScorerUnavailable { .. })
        ));
    }

    #[test]
    fn short_logit_rows_are_rejected() {
        let (url, _) = spawn_server(vec![(200, r#"{"logits":[[1.0,0.0]]}"#.into())]);
        let scorer = HttpChoiceScorer::new(&url).with_retry(fast_retry());
        assert!(matches!(
            scorer.score_batch(&[prompt("q1", "p1")]),
            Err(Error::ScorerUnavailable { .. })
        ));
    }
}
