use std::collections::BTreeMap;

use thiserror::Error;

use crate::game::{Decision, Offer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("acceptance curve needs at least one observation")]
    Empty,
    #[error("simulated curve has no observations at offer {0}, which the human data covers")]
    MissingOffer(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurvePoint {
    pub accepted: u32,
    pub count: u32,
}

impl CurvePoint {
    pub fn rate(&self) -> f64 {
        f64::from(self.accepted) / f64::from(self.count)
    }
}

/// Acceptance rate per offer value, with the number of observations behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceCurve {
    points: BTreeMap<u32, CurvePoint>,
}

impl AcceptanceCurve {
    pub fn from_observations(observations: &[(Offer, Decision)]) -> Result<Self, CurveError> {
        if observations.is_empty() {
            return Err(CurveError::Empty);
        }
        let mut points: BTreeMap<u32, CurvePoint> = BTreeMap::new();
        for (offer, decision) in observations {
            let p = points.entry(offer.coins()).or_insert(CurvePoint { accepted: 0, count: 0 });
            p.count += 1;
            p.accepted += u32::from(decision.is_accept());
        }
        Ok(AcceptanceCurve { points })
    }

    pub fn get(&self, offer: u32) -> Option<&CurvePoint> {
        self.points.get(&offer)
    }

    /// Points in ascending offer order.
    pub fn points(&self) -> impl Iterator<Item = (u32, &CurvePoint)> {
        self.points.iter().map(|(o, p)| (*o, p))
    }

    pub fn total_count(&self) -> u64 {
        self.points.values().map(|p| u64::from(p.count)).sum()
    }
}

/// Offer-frequency-weighted mean of per-offer Bernoulli W1 distances.
///
/// Sum over offers v seen in the human data of w(v) * |p_sim(v) - p_hum(v)|,
/// with w(v) the share of human observations made at v. Every human offer
/// must also appear in the simulated curve.
pub fn responder_distance(sim: &AcceptanceCurve, human: &AcceptanceCurve) -> Result<f64, CurveError> {
    let total = human.total_count() as f64;
    human.points().try_fold(0.0, |acc, (offer, hp)| {
        let sp = sim.get(offer).ok_or(CurveError::MissingOffer(offer))?;
        Ok(acc + f64::from(hp.count) / total * (sp.rate() - hp.rate()).abs())
    })
}
