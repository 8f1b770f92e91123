//! Regenerates tests/fixtures/recorded: six run logs (3 conditions x 2 roles,
//! 200 agents each) from a scripted stand-in for a chat model. Responses vary
//! in formatting the way real completions do, and a few agents fail.
//!
//!     cargo run --example record_fixture -- crates/core/tests/fixtures/recorded

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ultimatum_sim::backend::{
    synthetic_propose, synthetic_threshold, AgentContext, Backend, BackendError, CompletionRequest, CompletionResult,
    SyntheticParams,
};
use ultimatum_sim::prompting::RoleQuery;
use ultimatum_sim::runner::{PreparedRun, RunConfig, RunOptions};
use ultimatum_sim::{PersonaCondition, Role};

const N: usize = 200;

struct FixtureLlm {
    condition: PersonaCondition,
}

impl FixtureLlm {
    fn params(&self) -> SyntheticParams {
        match self.condition {
            PersonaCondition::NoPersona => SyntheticParams {
                base_offer: 50,
                offer_trait_gain: 0.0,
                base_threshold: 30,
                threshold_trait_gain: 0.0,
            },
            PersonaCondition::SixTraits => SyntheticParams {
                base_offer: 45,
                offer_trait_gain: 8.0,
                base_threshold: 25,
                threshold_trait_gain: 8.0,
            },
            PersonaCondition::TwentyOneTraits => SyntheticParams {
                base_offer: 40,
                offer_trait_gain: 12.0,
                base_threshold: 22,
                threshold_trait_gain: 12.0,
            },
        }
    }

    fn rng(&self, agent: &AgentContext<'_>) -> ChaCha8Rng {
        let role = matches!(agent.role, RoleQuery::Proposer) as u64;
        let cond = PersonaCondition::ALL.iter().position(|c| *c == self.condition).unwrap() as u64;
        ChaCha8Rng::seed_from_u64((agent.agent_index as u64) << 8 | cond << 1 | role)
    }
}

fn dress(json: String, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0 | 1 => format!("```json\n{json}\n```"),
        2 => format!("Sure! Here is my decision:\n{json}"),
        _ => json,
    }
}

impl Backend for FixtureLlm {
    fn kind(&self) -> &'static str {
        "openai"
    }

    fn model_name(&self) -> &str {
        "fixture-llm"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        let agent = &request.agent;
        let mut rng = self.rng(agent);
        let params = self.params();
        let special = (self.condition, agent.agent_index, matches!(agent.role, RoleQuery::Proposer));
        let raw = match (special, agent.role) {
            ((PersonaCondition::TwentyOneTraits, 17, true), _) => {
                return Err(BackendError::Transport {
                    attempts: 5,
                    message: "HTTP 503 Service Unavailable: overloaded".into(),
                })
            }
            ((PersonaCondition::NoPersona, 88, true), _) => {
                r#"{"Reason": "I keep nothing.", "Responder": "120", "Proposer": "-20"}"#.to_string()
            }
            ((PersonaCondition::SixTraits, 42, false), _) => "I would accept this offer.".to_string(),
            (_, RoleQuery::Proposer) => {
                let base = synthetic_propose(agent.persona, &params).coins() as i64;
                let jitter = [-5, 0, 0, 0, 5][rng.gen_range(0..5)];
                let offer = (base + jitter).clamp(0, 100);
                let reason = if offer >= 50 {
                    "An even split is fair and likely to be accepted."
                } else {
                    "I keep a bit more while still offering enough to avoid rejection."
                };
                let json = if rng.gen_bool(0.5) {
                    format!(
                        "{{\n    \"Reason\": \"{reason}\",\n    \"Responder\": \"{offer}\",\n    \"Proposer\": \"{}\"\n}}",
                        100 - offer
                    )
                } else {
                    format!("{{\"Reason\": \"{reason}\", \"Responder\": {offer}, \"Proposer\": {}}}", 100 - offer)
                };
                dress(json, &mut rng)
            }
            (_, RoleQuery::Responder { offer }) => {
                let threshold = synthetic_threshold(agent.persona, &params) as i64 + rng.gen_range(-3..=3);
                let (decision, reason) = if i64::from(offer.coins()) >= threshold {
                    (["accept", "Accept"][rng.gen_range(0..2)], "Something is better than nothing.")
                } else {
                    (["reject", "Reject"][rng.gen_range(0..2)], "The split is too unfair to accept.")
                };
                dress(format!("{{\n    \"Reason\": \"{reason}\",\n    \"Decision\": \"{decision}\"\n}}"), &mut rng)
            }
        };
        Ok(CompletionResult {
            raw_text: raw,
            latency_ms: 0,
            attempt_count: 1,
            provider_metadata: BTreeMap::new(),
        })
    }
}

fn main() -> anyhow::Result<()> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "recorded".into()));
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for condition in PersonaCondition::ALL {
        for role in [Role::Proposer, Role::Responder] {
            let config = RunConfig {
                run_id: format!("fixture-llm-{}-{role}", condition.key()),
                role,
                condition,
                n_agents: N,
                persona_source: fixtures.join("personas_1000.csv"),
                offers_source: (role == Role::Responder).then(|| fixtures.join("recorded/responder_offers_200.txt")),
                out_dir: out_dir.clone(),
                concurrency_limit: 4,
                ..Default::default()
            };
            let summary = PreparedRun::load(config)?.run(
                &FixtureLlm { condition },
                &RunOptions {
                    overwrite: true,
                    ..Default::default()
                },
            )?;
            println!("{} ({} entries, {} failed)", summary.log_path.display(), summary.total_entries, summary.failures);
        }
    }
    Ok(())
}
