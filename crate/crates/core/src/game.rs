//! One-shot ultimatum game: offers, decisions and payoffs in coins.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coins offered to the responder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Offer(u32);

impl Offer {
    pub fn coins(self) -> u32 {
        self.0
    }

    /// Offer as a fraction of the pie.
    pub fn fraction(self, config: &GameConfig) -> f64 {
        f64::from(self.0) / f64::from(config.total_coins)
    }
}

impl fmt::Display for Offer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        matches!(self, Decision::Accept)
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("accept") {
            Ok(Decision::Accept)
        } else if t.eq_ignore_ascii_case("reject") {
            Ok(Decision::Reject)
        } else {
            Err(format!("expected accept or reject, got {t:?}"))
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Proposer,
    Responder,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposer" => Ok(Role::Proposer),
            "responder" => Ok(Role::Responder),
            other => Err(format!("unknown role {other:?} (expected proposer or responder)")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Proposer => "proposer",
            Role::Responder => "responder",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayoffPair {
    pub proposer: u32,
    pub responder: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub total_coins: u32,
    pub coin_value_usd: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            total_coins: 100,
            coin_value_usd: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("offer {raw} outside 0..={max}")]
    OfferOutOfRange { raw: i64, max: u32 },
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.total_coins == 0 {
            return Err(GameError::InvalidConfig("total_coins must be positive".into()));
        }
        if !(self.coin_value_usd.is_finite() && self.coin_value_usd > 0.0) {
            return Err(GameError::InvalidConfig("coin_value_usd must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_offer(&self, raw: i64) -> Result<Offer, GameError> {
        if (0..=i64::from(self.total_coins)).contains(&raw) {
            Ok(Offer(raw as u32))
        } else {
            Err(GameError::OfferOutOfRange {
                raw,
                max: self.total_coins,
            })
        }
    }

    pub fn payoff(&self, offer: Offer, decision: Decision) -> PayoffPair {
        match decision {
            Decision::Accept => PayoffPair {
                proposer: self.total_coins - offer.0,
                responder: offer.0,
            },
            Decision::Reject => PayoffPair {
                proposer: 0,
                responder: 0,
            },
        }
    }
}
