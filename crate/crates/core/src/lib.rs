//! Persona-conditioned ultimatum game simulation.
//!
//! Agents are built from behavioral-economics microdata, play one-shot
//! ultimatum games through an LLM (or a synthetic or replayed stand-in), and
//! their aggregate play is compared with human benchmark data using
//! Wasserstein distances.

pub mod backend;
pub mod eval;
pub mod game;
pub mod persona;
pub mod prompting;
pub mod runlog;
pub mod runner;

pub use game::{Decision, GameConfig, Offer, Role};
pub use persona::{Indicator, PersonaCondition, PersonaRecord};
