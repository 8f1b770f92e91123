//! Prompt rendering and structured response parsing.

mod parse;
mod render;

pub use parse::{
    extract_first_json_object, parse_proposer_response, parse_responder_response, ParseError,
    ParsedProposerResponse, ParsedResponderResponse,
};
pub use render::{
    format_trait_value, render_agent_prompt, render_persona_block, render_proposer_prompt, render_responder_prompt,
    Demographics, Prompt, RoleQuery, BRIDGE_SENTENCE, GAME_DESCRIPTION, PERSONA_PREAMBLE,
};
