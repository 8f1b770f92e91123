use serde::Deserialize;
use ultimatum_sim::game::GameConfig;
use ultimatum_sim::prompting::{parse_proposer_response, parse_responder_response};

#[derive(Deserialize)]
pub struct Case {
    pub name: String,
    pub role: String,
    pub raw: String,
    pub expect: Expect,
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum Expect {
    Offer { offer: u32, warnings: Vec<String> },
    Decision { decision: String, warnings: Vec<String> },
    Failure { failure: String },
}

/// Outcome of one corpus case as a comparable string; `Ok(())` when it matches.
pub fn check_case(case: &Case, game: &GameConfig) -> Result<(), String> {
    let actual = match case.role.as_str() {
        "proposer" => parse_proposer_response(&case.raw, game)
            .map(|p| format!("offer {} {:?}", p.offer.coins(), p.warnings))
            .map_err(|e| {
                assert_eq!(e.raw(), case.raw, "failure must carry the raw text");
                e.kind().to_string()
            }),
        "responder" => parse_responder_response(&case.raw)
            .map(|r| format!("decision {} {:?}", r.decision, r.warnings))
            .map_err(|e| {
                assert_eq!(e.raw(), case.raw, "failure must carry the raw text");
                e.kind().to_string()
            }),
        other => panic!("bad role {other}"),
    };
    let expected = match &case.expect {
        Expect::Offer { offer, warnings } => Ok(format!("offer {offer} {warnings:?}")),
        Expect::Decision { decision, warnings } => Ok(format!("decision {decision} {warnings:?}")),
        Expect::Failure { failure } => Err(failure.clone()),
    };
    if actual == expected {
        Ok(())
    } else {
        Err(format!("{}: expected {expected:?}, got {actual:?}", case.name))
    }
}

pub fn load_corpus() -> Vec<Case> {
    let text = std::fs::read_to_string(super::fixture("malformed_responses.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

