//! Live chat-completions backend.
//!
//! Speaks the common `POST {endpoint}/chat/completions` protocol: JSON body
//! with `model`, `messages`, `top_p`, `max_tokens`, and `temperature` only
//! when explicitly configured; the reply text is read from
//! `choices[0].message.content`. Auth is a bearer token taken from the
//! `DEBATE_LAB_API_KEY` environment variable. Transient failures (transport
//! errors, 429, 5xx) are retried with exponential backoff and jitter; after
//! the attempt budget the call fails and the question is surfaced as a
//! run-log failure rather than aborting the run.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::agents::{
    AgentError, AgentSession, ChatMessage, GenerationContext, OfflineProvider, SessionProvider,
};
use crate::rng::SplitMix64;
use crate::types::{AgentSpec, BackendKind, GenerationParams, Question};

pub const API_KEY_ENV: &str = "DEBATE_LAB_API_KEY";

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Backoff before attempt `attempt` (1-based): base * 2^(attempt-1),
    /// capped, with multiplicative jitter in [0.5, 1.0].
    fn delay(&self, attempt: u32, rng: &mut SplitMix64) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(2u32.saturating_pow(attempt.saturating_sub(1)))
            .min(self.max_delay);
        exp.mul_f64(0.5 + 0.5 * rng.next_f64())
    }
}

/// Counting semaphore bounding global in-flight HTTP requests.
struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.cv.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { sem: self }
    }
}

struct SemaphoreGuard<'a> {
    sem: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.sem.permits.lock().unwrap() += 1;
        self.sem.cv.notify_one();
    }
}

/// Shared HTTP client for every `http_chat` agent in a run.
pub struct HttpBackend {
    agent: ureq::Agent,
    api_key: Option<String>,
    retry: RetryPolicy,
    inflight: Option<Semaphore>,
}

impl HttpBackend {
    pub fn new(api_key: Option<String>, retry: RetryPolicy, max_inflight: Option<usize>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(300)))
            .build();
        Self {
            agent: config.into(),
            api_key,
            retry,
            inflight: max_inflight.map(Semaphore::new),
        }
    }

    /// Client with the key picked up from [`API_KEY_ENV`].
    pub fn from_env(retry: RetryPolicy, max_inflight: Option<usize>) -> Self {
        Self::new(std::env::var(API_KEY_ENV).ok(), retry, max_inflight)
    }

    /// One chat-completions call with retries. `agent_id`/`round` only
    /// contextualize errors.
    pub fn chat(
        &self,
        model: &str,
        endpoint: &str,
        messages: &[ChatMessage],
        params: &GenerationParams,
        agent_id: &str,
        round: u32,
    ) -> Result<String, AgentError> {
        let url = format!("{}/chat/completions", endpoint.trim_end_matches('/'));
        let mut body = json!({
            "model": model,
            "messages": messages,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        });
        if let Some(t) = params.temperature {
            body["temperature"] = json!(t);
        }

        let mut jitter = SplitMix64::new(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.subsec_nanos() as u64 ^ d.as_secs())
                .unwrap_or(0),
        );
        let mut last_detail = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay(attempt - 1, &mut jitter));
            }
            let outcome = {
                let _permit = self.inflight.as_ref().map(|s| s.acquire());
                let mut request = self.agent.post(&url);
                if let Some(key) = &self.api_key {
                    request = request.header("Authorization", &format!("Bearer {key}"));
                }
                request.send_json(&body)
            };
            match outcome {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        let value: Value = response.body_mut().read_json().map_err(|e| {
                            AgentError::MalformedResponse {
                                agent_id: agent_id.to_string(),
                                round,
                                detail: e.to_string(),
                            }
                        })?;
                        return extract_content(&value).ok_or_else(|| {
                            AgentError::MalformedResponse {
                                agent_id: agent_id.to_string(),
                                round,
                                detail: "choices[0].message.content missing".into(),
                            }
                        });
                    }
                    let detail = response
                        .body_mut()
                        .read_to_string()
                        .unwrap_or_default()
                        .chars()
                        .take(200)
                        .collect::<String>();
                    // 429 and 5xx are transient; other statuses fail fast.
                    if status != 429 && status < 500 {
                        return Err(AgentError::HttpStatus {
                            agent_id: agent_id.to_string(),
                            round,
                            status,
                            detail,
                        });
                    }
                    last_detail = format!("status {status}: {detail}");
                }
                Err(e) => {
                    last_detail = e.to_string();
                }
            }
        }
        Err(AgentError::Transport {
            agent_id: agent_id.to_string(),
            round,
            attempts: self.retry.max_attempts,
            detail: last_detail,
        })
    }
}

fn extract_content(value: &Value) -> Option<String> {
    value
        .get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

/// Session for one `http_chat` agent on one question. Stateless beyond the
/// shared client; never mutates the history it is given, so retries are
/// idempotent at the request level.
pub struct HttpSession<'a> {
    backend: &'a HttpBackend,
    agent_id: String,
    model: String,
    endpoint: String,
    params: GenerationParams,
    round: u32,
}

impl AgentSession for HttpSession<'_> {
    fn generate(&mut self, ctx: &GenerationContext<'_>) -> Result<String, AgentError> {
        self.round = ctx.round;
        self.backend.chat(
            &self.model,
            &self.endpoint,
            ctx.history,
            ctx.params,
            &self.agent_id,
            ctx.round,
        )
    }

    fn summarize(
        &mut self,
        _source_text: &str,
        rendered_prompt: &str,
    ) -> Result<String, AgentError> {
        // One-off call with its own single-message conversation; the
        // debate history stays untouched.
        let messages = [ChatMessage::user(rendered_prompt)];
        self.backend.chat(
            &self.model,
            &self.endpoint,
            &messages,
            &self.params,
            &self.agent_id,
            self.round,
        )
    }
}

/// Provider covering all backend kinds: `http_chat` through the shared
/// client, everything else through the offline provider.
pub struct LiveProvider {
    backend: HttpBackend,
    offline: OfflineProvider,
}

impl LiveProvider {
    pub fn new(backend: HttpBackend, offline: OfflineProvider) -> Self {
        Self { backend, offline }
    }
}

impl SessionProvider for LiveProvider {
    fn open<'a>(
        &'a self,
        spec: &AgentSpec,
        question: &Question,
        agent_seed: u64,
    ) -> Result<Box<dyn AgentSession + 'a>, AgentError> {
        match &spec.backend {
            BackendKind::HttpChat { model, endpoint } => Ok(Box::new(HttpSession {
                backend: &self.backend,
                agent_id: spec.agent_id.clone(),
                model: model.clone(),
                endpoint: endpoint.clone(),
                params: spec.params.clone(),
                round: 1,
            })),
            _ => self.offline.open(spec, question, agent_seed),
        }
    }
}
