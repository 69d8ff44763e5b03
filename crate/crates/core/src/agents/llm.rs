//! Chat-completion client: one user message per request, exponential
//! backoff on transient failures, shared in-flight cap.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    /// Transport retries after the first attempt.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Re-prompts after an unparseable reply before falling back to quit.
    #[serde(default = "default_parse_retries")]
    pub parse_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_max_backoff")]
    pub backoff_max_ms: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
}

fn default_temperature() -> f64 {
    1.0
}
fn default_max_tokens() -> u32 {
    1024
}
fn default_retries() -> u32 {
    4
}
fn default_timeout() -> f64 {
    60.0
}
fn default_parse_retries() -> u32 {
    2
}
fn default_backoff() -> u64 {
    500
}
fn default_max_backoff() -> u64 {
    30_000
}
fn default_in_flight() -> usize {
    8
}
fn default_key_env() -> String {
    "LLM_API_KEY".to_string()
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: default_temperature(),
            max_output_tokens: default_max_tokens(),
            retries: default_retries(),
            timeout_secs: default_timeout(),
            parse_retries: default_parse_retries(),
            backoff_base_ms: default_backoff(),
            backoff_max_ms: default_max_backoff(),
            max_in_flight: default_in_flight(),
            api_key_env: default_key_env(),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.endpoint.is_empty() || self.model.is_empty() {
            return Err(AgentError::InvalidSpec("llm endpoint and model are required".into()));
        }
        if !(self.timeout_secs > 0.0) || self.max_in_flight == 0 {
            return Err(AgentError::InvalidSpec("timeout and max_in_flight must be positive".into()));
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .backoff_base_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.backoff_max_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChatResponse {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub choices: Vec<ChatChoice>,
    #[serde(default)]
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatChoice {
    pub message: ChatMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("http status {0}: {1}")]
    Status(u16, String),
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl TransportError {
    pub fn is_transient(&self) -> bool {
        match self {
            TransportError::Timeout | TransportError::Network(_) | TransportError::Malformed(_) => true,
            TransportError::Status(code, _) => *code == 408 || *code == 429 || *code >= 500,
        }
    }
}

pub trait ChatTransport: Send + Sync {
    fn send(&self, request: &ChatRequest, timeout: Duration) -> Result<ChatResponse, TransportError>;
}

/// Blocking HTTP JSON transport.
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key,
        }
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, request: &ChatRequest, timeout: Duration) -> Result<ChatResponse, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(request).map_err(map_ureq)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(map_ureq)?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status, body.chars().take(200).collect()));
        }
        serde_json::from_str(&body).map_err(|e| TransportError::Malformed(e.to_string()))
    }
}

fn map_ureq(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::StatusCode(code) => TransportError::Status(code, String::new()),
        other => TransportError::Network(other.to_string()),
    }
}

/// Audit record for one completed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub request_id: Option<String>,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    /// Failed attempts before this one succeeded.
    pub retries: u32,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub call: CallRecord,
}

struct InFlight {
    limit: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.current.lock().expect("in-flight lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("in-flight lock");
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.current.lock().expect("in-flight lock") -= 1;
        self.0.freed.notify_one();
    }
}

pub struct LlmClient {
    config: LlmConfig,
    transport: Box<dyn ChatTransport>,
    in_flight: InFlight,
}

impl LlmClient {
    pub fn new(config: LlmConfig, transport: Box<dyn ChatTransport>) -> Self {
        let limit = config.max_in_flight.max(1);
        Self {
            config,
            transport,
            in_flight: InFlight {
                limit,
                current: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    /// HTTP client with the API key read from `config.api_key_env`.
    pub fn from_env(config: LlmConfig) -> Result<Self, AgentError> {
        config.validate()?;
        let key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let transport = HttpTransport::new(config.endpoint.clone(), key);
        Ok(Self::new(config, Box::new(transport)))
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn request_for(&self, prompt: &str) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt.to_string(),
            }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_output_tokens,
        }
    }

    pub fn complete(&self, prompt: &str) -> Result<Completion, AgentError> {
        let request = self.request_for(prompt);
        let timeout = Duration::from_secs_f64(self.config.timeout_secs);
        let mut last_err = None;
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff(attempt - 1));
            }
            let started = Instant::now();
            let result = {
                let _slot = self.in_flight.acquire();
                self.transport.send(&request, timeout)
            };
            match result.and_then(extract_text) {
                Ok((text, resp)) => {
                    let usage = resp.usage.unwrap_or_default();
                    return Ok(Completion {
                        call: CallRecord {
                            request_id: resp.id,
                            latency_ms: started.elapsed().as_millis() as u64,
                            prompt_tokens: usage.prompt_tokens,
                            completion_tokens: usage.completion_tokens,
                            retries: attempt,
                            raw: text.clone(),
                        },
                        text,
                    });
                }
                Err(e) => {
                    log::warn!("llm attempt {} failed: {e}", attempt + 1);
                    let transient = e.is_transient();
                    last_err = Some(e);
                    if !transient {
                        break;
                    }
                }
            }
        }
        Err(AgentError::AgentUnavailable(
            last_err.map(|e| e.to_string()).unwrap_or_default(),
        ))
    }
}

fn extract_text(resp: ChatResponse) -> Result<(String, ChatResponse), TransportError> {
    let text = resp
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .ok_or_else(|| TransportError::Malformed("no choices".into()))?;
    Ok((text, resp))
}
