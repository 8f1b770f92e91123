use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::backend::{
    Backend, BackendError, HttpBackend, HttpSettings, ReplayBackend, RetryPolicy, SyntheticBackend, SyntheticParams,
};
use crate::game::{GameConfig, Role};
use crate::persona::{PersonaCondition, PersonaSchema};
use crate::runlog::{RunLog, PROTOCOL_VERSION};

/// Sampling temperature used for every protocol run.
pub const PROTOCOL_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Openai(HttpSettings),
    Synthetic(SyntheticSettings),
    Replay(ReplaySettings),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Synthetic(SyntheticSettings::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSettings {
    pub model_name: String,
    pub params: SyntheticParams,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        SyntheticSettings {
            model_name: "synthetic".into(),
            params: SyntheticParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySettings {
    /// Recorded run log to answer from.
    pub log: PathBuf,
}

impl BackendConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendConfig::Openai(_) => "openai",
            BackendConfig::Synthetic(_) => "synthetic",
            BackendConfig::Replay(_) => "replay",
        }
    }

    pub fn max_output_tokens(&self) -> u32 {
        match self {
            BackendConfig::Openai(s) => s.max_output_tokens,
            _ => HttpSettings::default().max_output_tokens,
        }
    }

    pub fn build(&self, policy: &RetryPolicy) -> Result<Box<dyn Backend>, BackendError> {
        Ok(match self {
            BackendConfig::Openai(s) => Box::new(HttpBackend::from_env(s.clone(), policy.clone())?),
            BackendConfig::Synthetic(s) => Box::new(SyntheticBackend::new(s.model_name.clone(), s.params.clone())?),
            BackendConfig::Replay(s) => {
                let log = RunLog::read(&s.log)
                    .map_err(|e| BackendError::Config(format!("cannot load replay log: {e}")))?;
                Box::new(ReplayBackend::from_log(&log))
            }
        })
    }
}

/// Everything needed to run one (backend, condition, role) experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub run_id: String,
    pub role: Role,
    pub condition: PersonaCondition,
    pub n_agents: usize,
    pub persona_source: PathBuf,
    pub persona_schema: PersonaSchema,
    /// Responder runs only: one offer per agent, paired by line index.
    pub offers_source: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub concurrency_limit: usize,
    /// Reserved; protocol runs are deterministic.
    pub seed: u64,
    pub game: GameConfig,
    pub retry: RetryPolicy,
    pub backend: BackendConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_id: "run".into(),
            role: Role::Proposer,
            condition: PersonaCondition::NoPersona,
            n_agents: 1000,
            persona_source: PathBuf::from("personas.csv"),
            persona_schema: PersonaSchema::default(),
            offers_source: None,
            out_dir: PathBuf::from("runs"),
            concurrency_limit: 8,
            seed: 0,
            game: GameConfig::default(),
            retry: RetryPolicy::default(),
            backend: BackendConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(format!("invalid config: {e}")))
    }

    /// Load a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.persona_source);
        fix(&mut self.out_dir);
        if let Some(p) = self.offers_source.as_mut() {
            fix(p);
        }
        if let BackendConfig::Replay(r) = &mut self.backend {
            fix(&mut r.log);
        }
    }

    pub fn log_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.jsonl", self.run_id))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) {
            return Err(RunError::Config(format!("invalid run_id {:?}", self.run_id)));
        }
        if self.n_agents == 0 {
            return Err(RunError::Config("n_agents must be positive".into()));
        }
        if self.concurrency_limit == 0 {
            return Err(RunError::Config("concurrency_limit must be positive".into()));
        }
        if self.role == Role::Responder && self.offers_source.is_none() {
            return Err(RunError::Config("responder runs require offers_source".into()));
        }
        self.game.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.retry.validate()?;
        Ok(())
    }

    /// Digest of everything that determines the prompts and how they are
    /// answered. Operational knobs (paths, concurrency, retry timing) are
    /// left out so a resumed run may change them.
    pub fn config_hash(&self, persona_bytes: &[u8], offers_bytes: Option<&[u8]>) -> String {
        let backend = match &self.backend {
            BackendConfig::Openai(s) => serde_json::json!({
                "kind": "openai",
                "model": s.model,
                "max_output_tokens": s.max_output_tokens,
                "persona_as_system": s.persona_as_system,
            }),
            BackendConfig::Synthetic(s) => serde_json::json!({
                "kind": "synthetic",
                "model": s.model_name,
                "params": s.params,
            }),
            BackendConfig::Replay(_) => serde_json::json!({ "kind": "replay" }),
        };
        let digest = |b: &[u8]| hex::encode(Sha256::digest(b));
        let view = serde_json::json!({
            "protocol_version": PROTOCOL_VERSION,
            "run_id": self.run_id,
            "role": self.role,
            "condition": self.condition,
            "n_agents": self.n_agents,
            "temperature": PROTOCOL_TEMPERATURE,
            "game": self.game,
            "persona_schema": {
                "delimiter": self.persona_schema.delimiter,
                "columns": self.persona_schema.columns.iter().collect::<std::collections::BTreeMap<_, _>>(),
            },
            "parse_retry_limit": self.retry.parse_retry_limit,
            "personas": digest(persona_bytes),
            "offers": offers_bytes.map(digest),
            "backend": backend,
        });
        digest(view.to_string().as_bytes())
    }
}
