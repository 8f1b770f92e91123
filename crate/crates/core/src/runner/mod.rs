//! Experiment orchestration: personas × condition × role through a backend
//! into a resumable run log.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use thiserror::Error;

pub use config::{BackendConfig, ReplaySettings, RunConfig, SyntheticSettings, PROTOCOL_TEMPERATURE};

use crate::backend::{AgentContext, Backend, BackendError, CompletionRequest};
use crate::game::{GameConfig, Offer, Role};
use crate::persona::{load_personas, PersonaError, PersonaRecord};
use crate::prompting::{parse_proposer_response, parse_responder_response, render_agent_prompt, ParseError, RoleQuery};
use crate::runlog::{FailureKind, Parsed, RunHeader, RunLog, RunLogEntry, RunLogError, RunLogWriter, PROTOCOL_VERSION};

/// Share of failed agents above which a run is reported as degraded.
pub const DEGRADED_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Log(#[from] RunLogError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("offers file {path}: {message}")]
    Offers { path: PathBuf, message: String },
    #[error("run log {path} was written with config hash {logged}, current config hashes to {current}")]
    ConfigHashMismatch {
        path: PathBuf,
        logged: String,
        current: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Parse an offers listing: one integer per line, optionally preceded by a
/// single header line. Blank lines are skipped.
pub fn parse_offer_lines(text: &str, game: &GameConfig) -> Result<Vec<Offer>, String> {
    let mut offers = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let cell = line.trim().trim_end_matches(',').trim();
        if cell.is_empty() {
            continue;
        }
        let was_first = std::mem::replace(&mut first, false);
        match cell.parse::<i64>() {
            Ok(v) => offers.push(game.validate_offer(v).map_err(|e| format!("line {}: {e}", i + 1))?),
            Err(_) if was_first => {}
            Err(_) => return Err(format!("line {}: expected an integer offer, got {cell:?}", i + 1)),
        }
    }
    Ok(offers)
}

pub fn load_offers(path: impl AsRef<Path>, game: &GameConfig) -> Result<Vec<Offer>, RunError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_offer_lines(&text, game).map_err(|message| RunError::Offers {
        path: path.to_path_buf(),
        message,
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Fail unless a partial log already exists.
    pub require_existing: bool,
    /// Discard any existing log and start over.
    pub overwrite: bool,
    /// Stop after writing this many new entries (simulates an interruption).
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub log_path: PathBuf,
    pub header: RunHeader,
    pub total_entries: usize,
    pub new_entries: usize,
    pub failures: usize,
    pub complete: bool,
    pub degraded: bool,
}

/// Inputs resolved from a [`RunConfig`]: personas, offers and the hash that
/// pins them.
pub struct PreparedRun {
    pub config: RunConfig,
    pub personas: Vec<PersonaRecord>,
    pub offers: Option<Vec<Offer>>,
    pub config_hash: String,
}

impl PreparedRun {
    /// Load and validate everything; fails before any backend call.
    pub fn load(config: RunConfig) -> Result<Self, RunError> {
        config.validate()?;
        let read = |p: &Path| {
            std::fs::read(p).map_err(|source| RunError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let persona_bytes = read(&config.persona_source)?;
        let personas = load_personas(persona_bytes.as_slice(), &config.persona_schema)?;
        let offers_bytes = match (&config.role, &config.offers_source) {
            (Role::Responder, Some(p)) => Some(read(p)?),
            _ => None,
        };
        let offers = match (&offers_bytes, &config.offers_source) {
            (Some(bytes), Some(path)) => {
                let text = String::from_utf8_lossy(bytes);
                Some(parse_offer_lines(&text, &config.game).map_err(|message| RunError::Offers {
                    path: path.clone(),
                    message,
                })?)
            }
            _ => None,
        };
        let config_hash = config.config_hash(&persona_bytes, offers_bytes.as_deref());
        let prepared = PreparedRun {
            config,
            personas,
            offers,
            config_hash,
        };
        prepared.check_population()?;
        Ok(prepared)
    }

    /// Build from in-memory inputs (tests, embedding).
    pub fn from_parts(
        config: RunConfig,
        personas: Vec<PersonaRecord>,
        offers: Option<Vec<Offer>>,
        config_hash: String,
    ) -> Result<Self, RunError> {
        config.validate()?;
        let prepared = PreparedRun {
            config,
            personas,
            offers,
            config_hash,
        };
        prepared.check_population()?;
        Ok(prepared)
    }

    fn check_population(&self) -> Result<(), RunError> {
        let n = self.config.n_agents;
        if n > self.personas.len() {
            return Err(RunError::Config(format!(
                "n_agents = {n} but only {} personas were loaded",
                self.personas.len()
            )));
        }
        if self.config.role == Role::Responder {
            let count = self.offers.as_ref().map_or(0, Vec::len);
            if count != n {
                return Err(RunError::Config(format!(
                    "responder run needs exactly {n} offers, offers file has {count}"
                )));
            }
        }
        Ok(())
    }

    /// Offer paired with each agent index (responder runs).
    pub fn offer_assignment(&self) -> Vec<(usize, Offer)> {
        self.offers
            .iter()
            .flatten()
            .take(self.config.n_agents)
            .copied()
            .enumerate()
            .collect()
    }

    fn header(&self, backend: &dyn Backend) -> RunHeader {
        RunHeader {
            run_id: self.config.run_id.clone(),
            config_hash: self.config_hash.clone(),
            protocol_version: PROTOCOL_VERSION,
            model_name: backend.model_name().to_string(),
            backend: backend.kind().to_string(),
            role: self.config.role,
            condition: self.config.condition,
            n_agents: self.config.n_agents,
        }
    }

    fn role_query(&self, index: usize) -> RoleQuery {
        match self.config.role {
            Role::Proposer => RoleQuery::Proposer,
            Role::Responder => RoleQuery::Responder {
                offer: self.offers.as_ref().expect("checked in check_population")[index],
            },
        }
    }

    /// Run one agent to completion. Only fatal backend errors escape.
    fn run_agent(&self, backend: &dyn Backend, index: usize) -> Result<RunLogEntry, BackendError> {
        let cfg = &self.config;
        let persona = &self.personas[index];
        let role = self.role_query(index);
        let prompt = render_agent_prompt(persona, cfg.condition, role, &cfg.game);
        let prompt_hash = prompt.hash();
        let request = CompletionRequest {
            prompt: &prompt,
            prompt_hash: prompt_hash.clone(),
            model_name: backend.model_name().to_string(),
            temperature: PROTOCOL_TEMPERATURE,
            max_output_tokens: cfg.backend.max_output_tokens(),
            request_tag: format!("{}/{}", cfg.run_id, index),
            agent: AgentContext {
                agent_index: index,
                persona,
                role,
            },
        };

        let mut attempts = 0u32;
        let mut raw_response = None;
        let mut malformed = 0u32;
        let (parsed, mut warnings) = loop {
            let result = match backend.complete(&request) {
                Ok(r) => r,
                Err(e) if e.is_fatal() => return Err(e),
                Err(e) => {
                    let message = match e {
                        BackendError::Transport { attempts: a, message } => {
                            attempts += a;
                            message
                        }
                        other => other.to_string(),
                    };
                    let failure = Parsed::Failure {
                        kind: FailureKind::TransportFailure,
                        message,
                    };
                    break (failure, Vec::new());
                }
            };
            attempts += result.attempt_count;
            let outcome = parse_outcome(role, &result.raw_text, &cfg.game);
            raw_response = Some(result.raw_text);
            match outcome {
                Ok(done) => break done,
                Err(_) if malformed < cfg.retry.parse_retry_limit => malformed += 1,
                Err(err) => {
                    let kind = match err {
                        ParseError::Parse { .. } => FailureKind::ParseFailure,
                        ParseError::Range { .. } => FailureKind::RangeFailure,
                    };
                    break (
                        Parsed::Failure {
                            kind,
                            message: err.to_string(),
                        },
                        Vec::new(),
                    );
                }
            }
        };
        if malformed > 0 && !matches!(parsed, Parsed::Failure { .. }) {
            warnings.push(format!("re-asked after {malformed} malformed response(s)"));
        }

        Ok(RunLogEntry {
            run_id: cfg.run_id.clone(),
            agent_index: index,
            persona_id: persona.persona_id.clone(),
            condition: cfg.condition,
            role: cfg.role,
            offer_presented: match role {
                RoleQuery::Responder { offer } => Some(offer),
                RoleQuery::Proposer => None,
            },
            prompt_hash,
            raw_response,
            parsed,
            attempt_count: attempts.max(1),
            warnings,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        })
    }

    /// Run (or resume) the experiment, appending to `out_dir/<run_id>.jsonl`.
    pub fn run(&self, backend: &dyn Backend, options: &RunOptions) -> Result<RunSummary, RunError> {
        let path = self.config.log_path();
        std::fs::create_dir_all(&self.config.out_dir).map_err(|source| RunError::Io {
            path: self.config.out_dir.clone(),
            source,
        })?;
        let header = self.header(backend);

        let exists = path.exists() && !options.overwrite;
        if options.require_existing && !exists {
            return Err(RunError::Config(format!("cannot resume: no run log at {}", path.display())));
        }
        let (mut writer, done) = if exists {
            let log = RunLog::read(&path)?;
            if log.header.config_hash != self.config_hash {
                return Err(RunError::ConfigHashMismatch {
                    path,
                    logged: log.header.config_hash,
                    current: self.config_hash.clone(),
                });
            }
            (RunLogWriter::append(&path)?, log.completed_indices())
        } else {
            (RunLogWriter::create(&path, &header)?, Default::default())
        };

        let mut todo: Vec<usize> = (0..self.config.n_agents).filter(|i| !done.contains(i)).collect();
        if let Some(limit) = options.stop_after {
            todo.truncate(limit);
        }

        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let workers = self.config.concurrency_limit.min(todo.len()).max(1);
        let (tx, rx) = mpsc::channel::<(usize, Result<RunLogEntry, BackendError>)>();

        let written = std::thread::scope(|scope| -> Result<usize, RunError> {
            for _ in 0..workers {
                let tx = tx.clone();
                let (todo, next, abort) = (&todo, &next, &abort);
                scope.spawn(move || loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let pos = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&index) = todo.get(pos) else { break };
                    let result = self.run_agent(backend, index);
                    if tx.send((pos, result)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);

            // Single writer; entries land in todo order regardless of completion order.
            let mut pending = BTreeMap::new();
            let mut cursor = 0;
            let mut fatal = None;
            for (pos, result) in rx {
                match result {
                    Ok(entry) => {
                        pending.insert(pos, entry);
                    }
                    Err(e) => {
                        abort.store(true, Ordering::Relaxed);
                        fatal.get_or_insert(e);
                    }
                }
                if fatal.is_some() {
                    continue;
                }
                while let Some(entry) = pending.remove(&cursor) {
                    writer.write_entry(&entry)?;
                    writer.flush()?;
                    cursor += 1;
                }
            }
            match fatal {
                Some(e) => Err(e.into()),
                None => Ok(cursor),
            }
        })?;

        let log = RunLog::read(&path)?;
        let failures = log.failure_count();
        let total = log.entries.len();
        Ok(RunSummary {
            log_path: path,
            header: log.header,
            total_entries: total,
            new_entries: written,
            failures,
            complete: total == self.config.n_agents,
            degraded: failures as f64 > DEGRADED_FAILURE_RATE * self.config.n_agents as f64,
        })
    }
}

fn parse_outcome(role: RoleQuery, raw: &str, game: &GameConfig) -> Result<(Parsed, Vec<String>), ParseError> {
    match role {
        RoleQuery::Proposer => parse_proposer_response(raw, game).map(|p| {
            (
                Parsed::Offer {
                    offer: p.offer,
                    proposer_coins: p.proposer_coins,
                },
                p.warnings,
            )
        }),
        RoleQuery::Responder { .. } => {
            parse_responder_response(raw).map(|r| (Parsed::Decision { decision: r.decision }, r.warnings))
        }
    }
}

/// Load inputs, build the configured backend and run.
pub fn run_from_config(config: RunConfig, options: &RunOptions) -> Result<RunSummary, RunError> {
    let prepared = PreparedRun::load(config)?;
    let backend = prepared.config.backend.build(&prepared.config.retry)?;
    prepared.run(backend.as_ref(), options)
}
