//! Deterministic trait-driven oracle. It is a pipeline exerciser, not a
//! behavioral model: proposers shift their offer with Generosity, responders
//! raise their acceptance threshold with Punishment and Inequality Aversion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, CompletionRequest, CompletionResult};
use crate::game::{Decision, Offer};
use crate::persona::{Component, PersonaRecord};
use crate::prompting::RoleQuery;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub base_offer: i64,
    /// Coins per z-unit of mean Generosity.
    pub offer_trait_gain: f64,
    pub base_threshold: i64,
    /// Coins per z-unit of (mean Punishment + mean Inequality Aversion/WTP).
    pub threshold_trait_gain: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            base_offer: 40,
            offer_trait_gain: 10.0,
            base_threshold: 20,
            threshold_trait_gain: 10.0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.offer_trait_gain.is_finite() && self.threshold_trait_gain.is_finite()) {
            return Err(BackendError::Config("synthetic gains must be finite".into()));
        }
        Ok(())
    }
}

fn clamp_coins(x: f64) -> u32 {
    x.round().clamp(0.0, 100.0) as u32
}

pub fn synthetic_propose(persona: &PersonaRecord, params: &SyntheticParams) -> Offer {
    let g = persona.component_mean(Component::Generosity);
    let coins = clamp_coins(params.base_offer as f64 + params.offer_trait_gain * g);
    crate::game::GameConfig::default()
        .validate_offer(i64::from(coins))
        .expect("clamped into range")
}

/// Smallest offer the persona accepts.
pub fn synthetic_threshold(persona: &PersonaRecord, params: &SyntheticParams) -> u32 {
    let q = persona.component_mean(Component::Punishment)
        + persona.component_mean(Component::InequalityAversionWtp);
    clamp_coins(params.base_threshold as f64 + params.threshold_trait_gain * q)
}

pub fn synthetic_respond(persona: &PersonaRecord, offer: Offer, params: &SyntheticParams) -> Decision {
    if offer.coins() >= synthetic_threshold(persona, params) {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Answers in the same JSON shape a well-behaved model would.
#[derive(Debug, Clone)]
pub struct SyntheticBackend {
    model_name: String,
    params: SyntheticParams,
}

impl SyntheticBackend {
    pub fn new(model_name: impl Into<String>, params: SyntheticParams) -> Result<Self, BackendError> {
        params.validate()?;
        Ok(SyntheticBackend {
            model_name: model_name.into(),
            params,
        })
    }
}

impl Backend for SyntheticBackend {
    fn kind(&self) -> &'static str {
        "synthetic"
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        let persona = request.agent.persona;
        let raw_text = match request.agent.role {
            RoleQuery::Proposer => {
                let offer = synthetic_propose(persona, &self.params);
                serde_json::json!({
                    "Reason": "synthetic oracle",
                    "Responder": offer.coins().to_string(),
                    "Proposer": (100 - offer.coins()).to_string(),
                })
            }
            RoleQuery::Responder { offer } => {
                let threshold = synthetic_threshold(persona, &self.params);
                let decision = synthetic_respond(persona, offer, &self.params);
                serde_json::json!({
                    "Reason": format!("synthetic oracle, threshold {threshold}"),
                    "Decision": decision.to_string(),
                })
            }
        }
        .to_string();
        Ok(CompletionResult {
            raw_text,
            latency_ms: 0,
            attempt_count: 1,
            provider_metadata: BTreeMap::new(),
        })
    }
}
