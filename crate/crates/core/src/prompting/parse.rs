use serde_json::{Map, Value};
use thiserror::Error;

use crate::game::{Decision, GameConfig, GameError, Offer};

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProposerResponse {
    pub reason: String,
    pub offer: Offer,
    pub proposer_coins: Option<i64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponderResponse {
    pub reason: String,
    pub decision: Decision,
    pub warnings: Vec<String>,
}

/// Why a model response could not be turned into a game move. Both variants
/// keep the raw response so it can be logged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("parse failure: {reason}")]
    Parse { reason: String, raw: String },
    #[error("offer {value} out of range 0..={max}")]
    Range { value: i64, max: u32, raw: String },
}

impl ParseError {
    /// Stable failure-kind tag used in run logs.
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Parse { .. } => "parse_failure",
            ParseError::Range { .. } => "range_failure",
        }
    }

    pub fn raw(&self) -> &str {
        match self {
            ParseError::Parse { raw, .. } | ParseError::Range { raw, .. } => raw,
        }
    }

    fn parse(reason: impl Into<String>, raw: &str) -> Self {
        ParseError::Parse {
            reason: reason.into(),
            raw: raw.to_string(),
        }
    }
}

/// Returns the first balanced `{...}` span in `text`, skipping braces that
/// sit inside JSON string literals.
pub fn extract_first_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, b) in text.as_bytes()[start..].iter().enumerate() {
        if in_string {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=start + offset]);
                }
            }
            _ => {}
        }
    }
    None
}

fn json_object(raw: &str) -> Result<Map<String, Value>, ParseError> {
    let block = extract_first_json_object(raw).ok_or_else(|| ParseError::parse("no JSON object found", raw))?;
    match serde_json::from_str::<Value>(block) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ParseError::parse("JSON block is not an object", raw)),
        Err(e) => Err(ParseError::parse(format!("invalid JSON: {e}"), raw)),
    }
}

/// Integer from a JSON number or a numeric string. Integral floats such as
/// `50.0` are accepted.
fn integer_field(value: &Value) -> Option<i64> {
    fn from_f64(f: f64) -> Option<i64> {
        (f.is_finite() && f.fract() == 0.0 && f.abs() < 1e15).then_some(f as i64)
    }
    match value {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().and_then(from_f64)),
        Value::String(s) => {
            let s = s.trim();
            s.parse::<i64>().ok().or_else(|| s.parse::<f64>().ok().and_then(from_f64))
        }
        _ => None,
    }
}

fn reason_field(map: &Map<String, Value>, warnings: &mut Vec<String>) -> String {
    match map.get("Reason") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => {
            warnings.push("missing Reason".to_string());
            String::new()
        }
    }
}

pub fn parse_proposer_response(raw: &str, config: &GameConfig) -> Result<ParsedProposerResponse, ParseError> {
    let map = json_object(raw)?;
    let mut warnings = Vec::new();
    let reason = reason_field(&map, &mut warnings);

    let responder_value = map
        .get("Responder")
        .ok_or_else(|| ParseError::parse("missing key \"Responder\"", raw))?;
    let responder = integer_field(responder_value)
        .ok_or_else(|| ParseError::parse(format!("Responder value {responder_value} is not an integer"), raw))?;
    let offer = config.validate_offer(responder).map_err(|e| match e {
        GameError::OfferOutOfRange { raw: value, max } => ParseError::Range {
            value,
            max,
            raw: raw.to_string(),
        },
        other => ParseError::parse(other.to_string(), raw),
    })?;

    let proposer_coins = match map.get("Proposer") {
        None => None,
        Some(v) => {
            let parsed = integer_field(v);
            if parsed.is_none() {
                warnings.push(format!("Proposer value {v} is not an integer"));
            }
            parsed
        }
    };
    if let Some(p) = proposer_coins {
        let total = i64::from(config.total_coins);
        if responder + p != total {
            warnings.push(format!("sum mismatch: Responder {responder} + Proposer {p} != {total}"));
        }
    }

    Ok(ParsedProposerResponse {
        reason,
        offer,
        proposer_coins,
        warnings,
    })
}

pub fn parse_responder_response(raw: &str) -> Result<ParsedResponderResponse, ParseError> {
    let map = json_object(raw)?;
    let mut warnings = Vec::new();
    let reason = reason_field(&map, &mut warnings);
    let decision = match map.get("Decision") {
        Some(Value::String(s)) => s
            .parse::<Decision>()
            .map_err(|e| ParseError::parse(format!("Decision: {e}"), raw))?,
        Some(other) => return Err(ParseError::parse(format!("Decision value {other} is not a string"), raw)),
        None => return Err(ParseError::parse("missing key \"Decision\"", raw)),
    };
    Ok(ParsedResponderResponse {
        reason,
        decision,
        warnings,
    })
}
