use std::collections::{BTreeMap, HashMap};

use super::{Backend, BackendError, CompletionRequest, CompletionResult};
use crate::runlog::{FailureKind, Parsed, RunLog};

/// Answers from a recorded run log, keyed by (prompt hash, agent index).
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    model_name: String,
    recorded: HashMap<(String, usize), Recorded>,
}

#[derive(Debug, Clone)]
struct Recorded {
    raw_response: Option<String>,
    attempt_count: u32,
    transport_failure: Option<String>,
}

impl ReplayBackend {
    pub fn from_log(log: &RunLog) -> Self {
        let recorded = log
            .entries
            .iter()
            .map(|e| {
                let transport_failure = match &e.parsed {
                    Parsed::Failure {
                        kind: FailureKind::TransportFailure,
                        message,
                    } => Some(message.clone()),
                    _ => None,
                };
                (
                    (e.prompt_hash.clone(), e.agent_index),
                    Recorded {
                        raw_response: e.raw_response.clone(),
                        attempt_count: e.attempt_count,
                        transport_failure,
                    },
                )
            })
            .collect();
        ReplayBackend {
            model_name: log.header.model_name.clone(),
            recorded,
        }
    }

    pub fn len(&self) -> usize {
        self.recorded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recorded.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn kind(&self) -> &'static str {
        "replay"
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        let key = (request.prompt_hash.clone(), request.agent.agent_index);
        let rec = self.recorded.get(&key).ok_or_else(|| BackendError::ReplayMiss {
            prompt_hash: key.0.clone(),
            agent_index: key.1,
        })?;
        if let Some(message) = &rec.transport_failure {
            return Err(BackendError::Transport {
                attempts: rec.attempt_count,
                message: message.clone(),
            });
        }
        let raw_text = rec.raw_response.clone().unwrap_or_default();
        let mut provider_metadata = BTreeMap::new();
        provider_metadata.insert("replayed".to_string(), "true".to_string());
        Ok(CompletionResult {
            raw_text,
            latency_ms: 0,
            attempt_count: 1,
            provider_metadata,
        })
    }
}
