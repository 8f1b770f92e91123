//! Decision engines behind a single completion contract.
//!
//! Every backend takes a rendered prompt and returns raw response text; the
//! runner parses it the same way regardless of where it came from.

mod http;
mod replay;
mod synthetic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persona::PersonaRecord;
use crate::prompting::{Prompt, RoleQuery};

pub use http::{HttpBackend, HttpSettings};
pub use replay::ReplayBackend;
pub use synthetic::{synthetic_propose, synthetic_respond, synthetic_threshold, SyntheticBackend, SyntheticParams};

/// The agent a request is made on behalf of.
#[derive(Debug, Clone, Copy)]
pub struct AgentContext<'a> {
    pub agent_index: usize,
    pub persona: &'a PersonaRecord,
    pub role: RoleQuery,
}

#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a Prompt,
    pub prompt_hash: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// `run_id/agent_index`, for tracing.
    pub request_tag: String,
    pub agent: AgentContext<'a>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub raw_text: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
    pub provider_metadata: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum BackendError {
    /// Retries exhausted or a non-retryable response; the agent fails but the run continues.
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    /// Credentials rejected; the run cannot proceed.
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("no recorded response for prompt hash {prompt_hash} agent {agent_index}")]
    ReplayMiss { prompt_hash: String, agent_index: usize },
    #[error("backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    /// Errors that abort the whole run rather than just one agent.
    pub fn is_fatal(&self) -> bool {
        matches!(self, BackendError::Auth(_) | BackendError::Config(_) | BackendError::ReplayMiss { .. })
    }
}

/// Implementations must tolerate concurrent calls from many workers.
pub trait Backend: Send + Sync {
    /// Short name of the backend kind ("openai", "synthetic", "replay").
    fn kind(&self) -> &'static str;

    fn model_name(&self) -> &str;

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub backoff_multiplier: f64,
    /// HTTP statuses worth retrying. Connection failures and timeouts are always retried.
    pub retryable_statuses: Vec<u16>,
    /// Re-asks with the identical prompt when the response cannot be parsed.
    pub parse_retry_limit: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_backoff_ms: 500,
            backoff_multiplier: 2.0,
            retryable_statuses: vec![408, 409, 429, 500, 502, 503, 504],
            parse_retry_limit: 3,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_attempts == 0 {
            return Err(BackendError::Config("retry.max_attempts must be at least 1".into()));
        }
        if !(self.backoff_multiplier.is_finite() && self.backoff_multiplier >= 1.0) {
            return Err(BackendError::Config("retry.backoff_multiplier must be >= 1".into()));
        }
        Ok(())
    }

    /// Delay before attempt `attempt + 1`, given `attempt` (1-based) just failed.
    pub fn backoff_ms(&self, attempt: u32) -> u64 {
        let factor = self.backoff_multiplier.powi(attempt.saturating_sub(1) as i32);
        (self.base_backoff_ms as f64 * factor).min(60_000.0) as u64
    }
}
