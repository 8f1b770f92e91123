//! OpenAI-style chat-completion client with bounded exponential backoff.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendError, CompletionRequest, CompletionResult, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    /// Base URL up to and including the API version, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_output_tokens: u32,
    pub request_timeout_secs: u64,
    /// Send the persona block as a system message instead of inline.
    pub persona_as_system: bool,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-2024-11-20".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_output_tokens: 512,
            request_timeout_secs: 120,
            persona_as_system: false,
        }
    }
}

pub struct HttpBackend {
    client: Client,
    endpoint: String,
    api_key: Option<String>,
    settings: HttpSettings,
    policy: RetryPolicy,
}

enum AttemptError {
    Retryable(String),
    Fatal(BackendError),
    GiveUp(String),
}

impl HttpBackend {
    /// Reads the key from the configured environment variable. A missing
    /// variable is allowed (for local endpoints without auth).
    pub fn from_env(settings: HttpSettings, policy: RetryPolicy) -> Result<Self, BackendError> {
        let api_key = std::env::var(&settings.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(settings, policy, api_key)
    }

    pub fn new(settings: HttpSettings, policy: RetryPolicy, api_key: Option<String>) -> Result<Self, BackendError> {
        policy.validate()?;
        let client = Client::builder()
            .timeout(Duration::from_secs(settings.request_timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(format!("cannot build HTTP client: {e}")))?;
        let endpoint = format!("{}/chat/completions", settings.base_url.trim_end_matches('/'));
        Ok(HttpBackend {
            client,
            endpoint,
            api_key,
            settings,
            policy,
        })
    }

    fn body(&self, request: &CompletionRequest<'_>) -> Value {
        let messages = match (&request.prompt.persona_block, self.settings.persona_as_system) {
            (Some(persona), true) => json!([
                {"role": "system", "content": persona},
                {"role": "user", "content": request.prompt.task_text()},
            ]),
            _ => json!([{"role": "user", "content": request.prompt.text()}]),
        };
        json!({
            "model": request.model_name,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }

    fn attempt(&self, body: &Value, tag: &str) -> Result<(String, BTreeMap<String, String>), AttemptError> {
        let mut req = self.client.post(&self.endpoint).json(body).header("X-Request-Tag", tag);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| AttemptError::Retryable(format!("request error: {e}")))?;
        let status = resp.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            let text = resp.text().unwrap_or_default();
            return Err(AttemptError::Fatal(BackendError::Auth(format!("HTTP {status}: {text}"))));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            let message = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
            return Err(if self.policy.retryable_statuses.contains(&status.as_u16()) {
                AttemptError::Retryable(message)
            } else {
                AttemptError::GiveUp(message)
            });
        }
        let value: Value = resp
            .json()
            .map_err(|e| AttemptError::Retryable(format!("unreadable response body: {e}")))?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| AttemptError::Retryable("response has no choices[0].message.content".into()))?
            .to_string();
        let mut meta = BTreeMap::new();
        for (key, ptr) in [
            ("id", "/id"),
            ("model", "/model"),
            ("finish_reason", "/choices/0/finish_reason"),
            ("prompt_tokens", "/usage/prompt_tokens"),
            ("completion_tokens", "/usage/completion_tokens"),
        ] {
            if let Some(v) = value.pointer(ptr) {
                let s = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
                meta.insert(key.to_string(), s);
            }
        }
        Ok((content, meta))
    }
}

impl Backend for HttpBackend {
    fn kind(&self) -> &'static str {
        "openai"
    }

    fn model_name(&self) -> &str {
        &self.settings.model
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        let body = self.body(request);
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            attempt += 1;
            let message = match self.attempt(&body, &request.request_tag) {
                Ok((raw_text, provider_metadata)) => {
                    return Ok(CompletionResult {
                        raw_text,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempt_count: attempt,
                        provider_metadata,
                    })
                }
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::GiveUp(message)) => {
                    return Err(BackendError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err(AttemptError::Retryable(message)) => message,
            };
            if attempt >= self.policy.max_attempts {
                return Err(BackendError::Transport {
                    attempts: attempt,
                    message,
                });
            }
            std::thread::sleep(Duration::from_millis(self.policy.backoff_ms(attempt)));
        }
    }
}
