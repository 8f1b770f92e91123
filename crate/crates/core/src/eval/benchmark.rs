use std::path::Path;

use super::EvalError;
use crate::game::{Decision, GameConfig, Offer};
use crate::runner::parse_offer_lines;

/// Human reference data: proposer offers and responder (offer, decision) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanBenchmark {
    pub proposer_offers: Vec<Offer>,
    pub responder_observations: Vec<(Offer, Decision)>,
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `offer,decision` lines with an optional header row.
pub fn parse_responder_observations(text: &str, game: &GameConfig) -> Result<Vec<(Offer, Decision)>, String> {
    let mut out = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let was_first = std::mem::replace(&mut first, false);
        let mut cells = line.split(',').map(str::trim);
        let (offer_cell, decision_cell) = (cells.next().unwrap_or(""), cells.next().unwrap_or(""));
        let offer = match offer_cell.parse::<i64>() {
            Ok(v) => game.validate_offer(v).map_err(|e| format!("line {}: {e}", i + 1))?,
            Err(_) if was_first => continue,
            Err(_) => return Err(format!("line {}: expected an integer offer, got {offer_cell:?}", i + 1)),
        };
        let decision = decision_cell
            .parse::<Decision>()
            .map_err(|e| format!("line {}: {e}", i + 1))?;
        out.push((offer, decision));
    }
    Ok(out)
}

impl HumanBenchmark {
    pub fn new(proposer_offers: Vec<Offer>, responder_observations: Vec<(Offer, Decision)>) -> Result<Self, EvalError> {
        if proposer_offers.is_empty() || responder_observations.is_empty() {
            return Err(EvalError::Benchmark("human benchmark needs proposer and responder data".into()));
        }
        Ok(HumanBenchmark {
            proposer_offers,
            responder_observations,
        })
    }

    pub fn load(proposer_path: impl AsRef<Path>, responder_path: impl AsRef<Path>, game: &GameConfig) -> Result<Self, EvalError> {
        let (pp, rp) = (proposer_path.as_ref(), responder_path.as_ref());
        let proposer = parse_offer_lines(&read(pp)?, game)
            .map_err(|e| EvalError::Benchmark(format!("{}: {e}", pp.display())))?;
        let responder = parse_responder_observations(&read(rp)?, game)
            .map_err(|e| EvalError::Benchmark(format!("{}: {e}", rp.display())))?;
        Self::new(proposer, responder)
    }

    /// The offers presented to simulated responders: the human responder
    /// offers in file order.
    pub fn responder_offers(&self) -> Vec<Offer> {
        self.responder_observations.iter().map(|(o, _)| *o).collect()
    }
}
