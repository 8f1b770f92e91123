use sha2::{Digest, Sha256};

use crate::game::{GameConfig, Offer};
use crate::persona::{select_traits, PersonaCondition, PersonaRecord};

pub const PERSONA_PREAMBLE: &str = "You embody a character with the following personality traits and demographics, each quantified by a value. A mean of 0 and a standard deviation of 1 are assumed for these values, where higher values signify a stronger inclination towards the corresponding trait:";

/// Only emitted when a persona block precedes the game description.
pub const BRIDGE_SENTENCE: &str = "Play the following game as someone of this personality.";

const GAME_INTRO: &str = "Here is the game description.";

pub const GAME_DESCRIPTION: &str = "A stack of coins is being divided between a proposer and a responder. The proposer decides how much to give the responder, and the responder decides whether or not to accept the offer. If the offer is accepted, the players split the money as the proposer suggested. If the offer is rejected, both parties receive no coin.";

const FORMAT_INTRO: &str = "Please tell me your decision in the following JSON format.";

const PROPOSER_FORMAT: &str = r#"{
    "Reason": "Your explanation here",
    "Responder": "Number of coins for the responder",
    "Proposer": "Number of coins for yourself"
}"#;

const RESPONDER_FORMAT: &str = r#"{
    "Reason": "Your explanation here",
    "Decision": "accept or reject"
}"#;

const SECTION_SEPARATOR: &str = "\n\n";

/// Demographic lines that close a persona block.
#[derive(Debug, Clone, Copy)]
pub struct Demographics<'a> {
    pub crt_score: u8,
    pub age: u32,
    pub gender: &'a str,
    pub country: &'a str,
}

impl<'a> From<&'a PersonaRecord> for Demographics<'a> {
    fn from(r: &'a PersonaRecord) -> Self {
        Demographics {
            crt_score: r.crt_score,
            age: r.age,
            gender: &r.gender,
            country: &r.country,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleQuery {
    Proposer,
    Responder { offer: Offer },
}

/// A rendered prompt, kept in its four sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub persona_block: Option<String>,
    pub game_description: String,
    pub role_query: String,
    pub output_format: String,
}

impl Prompt {
    /// Full prompt text: sections joined by a blank line.
    pub fn text(&self) -> String {
        self.persona_block
            .iter()
            .map(String::as_str)
            .chain([
                self.game_description.as_str(),
                self.role_query.as_str(),
                self.output_format.as_str(),
            ])
            .collect::<Vec<_>>()
            .join(SECTION_SEPARATOR)
    }

    /// Everything after the persona block, for backends that deliver the
    /// persona as a separate system message.
    pub fn task_text(&self) -> String {
        [
            self.game_description.as_str(),
            self.role_query.as_str(),
            self.output_format.as_str(),
        ]
        .join(SECTION_SEPARATOR)
    }

    /// Lowercase hex SHA-256 of [`Prompt::text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))
    }
}

/// Shortest decimal string that round-trips to the stored value; never uses
/// exponent notation.
pub fn format_trait_value(value: f64) -> String {
    format!("{value}")
}

pub fn render_persona_block(
    traits: &[(&str, f64)],
    demographics: Demographics<'_>,
    condition: PersonaCondition,
) -> Option<String> {
    if condition == PersonaCondition::NoPersona {
        return None;
    }
    let mut lines = vec![PERSONA_PREAMBLE.to_string()];
    lines.extend(
        traits
            .iter()
            .map(|(label, value)| format!("- {label} : {}", format_trait_value(*value))),
    );
    lines.push(format!("- Age : {}", demographics.age));
    lines.push(format!("- Gender : {}", demographics.gender));
    lines.push(format!("- CRT Score : {} of 3", demographics.crt_score));
    lines.push(format!("- Country of Residence: {}", demographics.country));
    Some(lines.join("\n"))
}

/// Persona block for a record under a condition.
pub(crate) fn persona_block_for(record: &PersonaRecord, condition: PersonaCondition) -> Option<String> {
    render_persona_block(&select_traits(record, condition), record.into(), condition)
}

fn game_section(has_persona: bool) -> String {
    if has_persona {
        format!("{BRIDGE_SENTENCE} {GAME_INTRO}\n{GAME_DESCRIPTION}")
    } else {
        format!("{GAME_INTRO}\n{GAME_DESCRIPTION}")
    }
}

fn render(persona_block: Option<String>, role_query: String, format: &str) -> Prompt {
    Prompt {
        game_description: game_section(persona_block.is_some()),
        persona_block,
        role_query,
        output_format: format!("{FORMAT_INTRO}\n{format}"),
    }
}

pub fn render_proposer_prompt(persona_block: Option<String>, config: &GameConfig) -> Prompt {
    let query = format!(
        "You are a proposer. {} coins will be divided. Each coin will be redeemed {} real-world dollar after the experiment. How would you suggest?",
        config.total_coins, config.coin_value_usd
    );
    render(persona_block, query, PROPOSER_FORMAT)
}

pub fn render_responder_prompt(persona_block: Option<String>, offer: Offer, config: &GameConfig) -> Prompt {
    let query = format!(
        "You are a responder. The proposer has offered you {} of {} coins. Each coin will be redeemed {} real-world dollar after the experiment. Would you accept or reject this offer?",
        offer.coins(),
        config.total_coins,
        config.coin_value_usd
    );
    render(persona_block, query, RESPONDER_FORMAT)
}

/// Render the prompt an agent sees for its persona, condition and role.
pub fn render_agent_prompt(
    record: &PersonaRecord,
    condition: PersonaCondition,
    role: RoleQuery,
    config: &GameConfig,
) -> Prompt {
    let block = persona_block_for(record, condition);
    match role {
        RoleQuery::Proposer => render_proposer_prompt(block, config),
        RoleQuery::Responder { offer } => render_responder_prompt(block, offer, config),
    }
}
