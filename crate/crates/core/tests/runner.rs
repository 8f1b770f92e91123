mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ultimatum_sim::backend::{AgentContext, Backend, BackendError, CompletionRequest, CompletionResult, ReplayBackend, SyntheticBackend, SyntheticParams};
use ultimatum_sim::game::{Decision, Role};
use ultimatum_sim::persona::{PersonaCondition, PersonaRecord, PersonaSchema};
use ultimatum_sim::prompting::RoleQuery;
use ultimatum_sim::runlog::{FailureKind, Parsed, RunLog};
use ultimatum_sim::runner::{PreparedRun, RunConfig, RunError, RunOptions};

fn zero_personas_csv(dir: &Path, n: usize) -> PathBuf {
    let mut text = PersonaSchema::required_columns().join(",");
    text.push('\n');
    for i in 0..n {
        let zeros = vec!["0"; 21].join(",");
        text.push_str(&format!("z{i},{zeros},2,40,female,US\n"));
    }
    let path = dir.join("personas.csv");
    std::fs::write(&path, text).unwrap();
    path
}

fn write_offers(dir: &Path, name: &str, offers: &[u32]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, offers.iter().map(|o| format!("{o}\n")).collect::<String>()).unwrap();
    path
}

fn config(dir: &Path, run_id: &str, role: Role, condition: PersonaCondition, n: usize) -> RunConfig {
    RunConfig {
        run_id: run_id.into(),
        role,
        condition,
        n_agents: n,
        persona_source: dir.join("personas.csv"),
        out_dir: dir.join("runs"),
        concurrency_limit: 4,
        ..Default::default()
    }
}

fn synthetic() -> SyntheticBackend {
    SyntheticBackend::new("synthetic", SyntheticParams::default()).unwrap()
}

#[test]
fn synthetic_proposers_with_neutral_personas_offer_forty() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 3);
    let run = PreparedRun::load(config(dir.path(), "p", Role::Proposer, PersonaCondition::SixTraits, 3)).unwrap();
    let summary = run.run(&synthetic(), &RunOptions::default()).unwrap();
    assert!(summary.complete);
    let log = RunLog::read(&summary.log_path).unwrap();
    assert_eq!(log.offers().iter().map(|o| o.coins()).collect::<Vec<_>>(), vec![40, 40, 40]);
    assert_eq!(log.header.n_agents, 3);
}

#[test]
fn no_persona_prompts_share_one_hash() {
    let dir = tempfile::tempdir().unwrap();
    let personas = common::fixture("personas_1000.csv");
    let mut cfg = config(dir.path(), "none", Role::Proposer, PersonaCondition::NoPersona, 1000);
    cfg.persona_source = personas;
    let summary = PreparedRun::load(cfg).unwrap().run(&synthetic(), &RunOptions::default()).unwrap();
    let log = RunLog::read(summary.log_path).unwrap();
    assert_eq!(log.entries.len(), 1000);
    let first = &log.entries[0].prompt_hash;
    assert!(log.entries.iter().all(|e| &e.prompt_hash == first));
}

#[test]
fn rerun_of_complete_run_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 5);
    let cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 5);
    let s1 = PreparedRun::load(cfg.clone()).unwrap().run(&synthetic(), &RunOptions::default()).unwrap();
    let bytes = std::fs::read(&s1.log_path).unwrap();
    let s2 = PreparedRun::load(cfg).unwrap().run(&synthetic(), &RunOptions::default()).unwrap();
    assert_eq!(s2.new_entries, 0);
    assert_eq!(std::fs::read(&s2.log_path).unwrap(), bytes);
}

#[test]
fn responder_threshold_decisions() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 3);
    let mut cfg = config(dir.path(), "r", Role::Responder, PersonaCondition::NoPersona, 3);
    cfg.offers_source = Some(write_offers(dir.path(), "offers.txt", &[0, 50, 100]));
    let summary = PreparedRun::load(cfg).unwrap().run(&synthetic(), &RunOptions::default()).unwrap();
    let log = RunLog::read(summary.log_path).unwrap();
    let decisions: Vec<Decision> = log.responder_observations().into_iter().map(|(_, d)| d).collect();
    assert_eq!(decisions, vec![Decision::Reject, Decision::Accept, Decision::Accept]);
}

struct CountingBackend(AtomicUsize);

impl Backend for CountingBackend {
    fn kind(&self) -> &'static str {
        "counting"
    }
    fn model_name(&self) -> &str {
        "counting"
    }
    fn complete(&self, _: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Err(BackendError::Config("should not be called".into()))
    }
}

#[test]
fn wrong_offer_count_fails_before_any_request() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 4);
    let mut cfg = config(dir.path(), "r", Role::Responder, PersonaCondition::NoPersona, 4);
    cfg.offers_source = Some(write_offers(dir.path(), "offers.txt", &[10, 20, 30]));
    let backend = CountingBackend(AtomicUsize::new(0));
    let err = PreparedRun::load(cfg).and_then(|r| r.run(&backend, &RunOptions::default()));
    assert!(matches!(err, Err(RunError::Config(ref m)) if m.contains("exactly 4 offers")), "{err:?}");
    assert_eq!(backend.0.load(Ordering::SeqCst), 0);
    assert!(!dir.path().join("runs/r.jsonl").exists());
}

#[test]
fn too_few_personas_rejected() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 2);
    let err = PreparedRun::load(config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 3));
    assert!(matches!(err, Err(RunError::Config(_))));
}

#[test]
fn resume_fills_only_missing_indices() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 5);
    let cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::SixTraits, 5);
    let full = PreparedRun::load(cfg.clone()).unwrap().run(&synthetic(), &RunOptions::default()).unwrap();
    // keep header + entries {0, 1, 3}
    let text = std::fs::read_to_string(&full.log_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let partial = format!("{}\n{}\n{}\n{}\n", lines[0], lines[1], lines[2], lines[4]);
    std::fs::write(&full.log_path, &partial).unwrap();

    let resumed = PreparedRun::load(cfg)
        .unwrap()
        .run(&synthetic(), &RunOptions { require_existing: true, ..Default::default() })
        .unwrap();
    assert_eq!(resumed.new_entries, 2);
    let after = std::fs::read_to_string(&full.log_path).unwrap();
    assert!(after.starts_with(&partial), "existing entries must be untouched");
    let log = RunLog::read(&full.log_path).unwrap();
    let order: Vec<usize> = log.entries.iter().map(|e| e.agent_index).collect();
    assert_eq!(order, vec![0, 1, 3, 2, 4]);
}

#[test]
fn resume_without_log_fails() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 2);
    let cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 2);
    let err = PreparedRun::load(cfg)
        .unwrap()
        .run(&synthetic(), &RunOptions { require_existing: true, ..Default::default() });
    assert!(matches!(err, Err(RunError::Config(_))));
}

#[test]
fn config_change_blocks_resume() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 4);
    let cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 4);
    PreparedRun::load(cfg.clone())
        .unwrap()
        .run(&synthetic(), &RunOptions { stop_after: Some(2), ..Default::default() })
        .unwrap();
    let mut changed = cfg.clone();
    changed.condition = PersonaCondition::TwentyOneTraits;
    let err = PreparedRun::load(changed).unwrap().run(&synthetic(), &RunOptions::default());
    assert!(matches!(err, Err(RunError::ConfigHashMismatch { .. })));
    // overwrite starts fresh
    let mut changed = cfg;
    changed.condition = PersonaCondition::TwentyOneTraits;
    let s = PreparedRun::load(changed)
        .unwrap()
        .run(&synthetic(), &RunOptions { overwrite: true, ..Default::default() })
        .unwrap();
    assert_eq!(s.total_entries, 4);
}

/// Backend that answers from a per-agent script of raw texts or errors, and
/// sleeps so completions arrive out of order.
struct ScriptedBackend {
    scripts: Mutex<BTreeMap<usize, Vec<Result<String, BackendError>>>>,
}

impl ScriptedBackend {
    fn new(scripts: Vec<(usize, Vec<Result<String, BackendError>>)>) -> Self {
        ScriptedBackend {
            scripts: Mutex::new(scripts.into_iter().collect()),
        }
    }
}

fn good_offer(c: u32) -> Result<String, BackendError> {
    Ok(format!(r#"{{"Reason":"r","Responder":"{c}","Proposer":"{}"}}"#, 100 - c))
}

impl Backend for ScriptedBackend {
    fn kind(&self) -> &'static str {
        "scripted"
    }
    fn model_name(&self) -> &str {
        "scripted"
    }
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        let AgentContext { agent_index, .. } = req.agent;
        std::thread::sleep(std::time::Duration::from_millis(((7 * agent_index) % 5) as u64));
        let next = {
            let mut s = self.scripts.lock().unwrap();
            let script = s.entry(agent_index).or_default();
            if script.is_empty() {
                good_offer(agent_index as u32)
            } else {
                script.remove(0)
            }
        };
        next.map(|raw_text| CompletionResult {
            raw_text,
            latency_ms: 0,
            attempt_count: 1,
            provider_metadata: Default::default(),
        })
    }
}

fn transport() -> Result<String, BackendError> {
    Err(BackendError::Transport {
        attempts: 5,
        message: "HTTP 503".into(),
    })
}

#[test]
fn malformed_and_failed_agents_are_logged_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 10);
    let cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 10);
    let backend = ScriptedBackend::new(vec![
        // recovers on the second ask
        (1, vec![Ok("no idea".into()), good_offer(45)]),
        // never parses: 1 ask + 3 re-asks
        (2, vec![Ok("x".into()), Ok("x".into()), Ok("x".into()), Ok("x".into())]),
        (3, vec![transport()]),
        (4, (0..4).map(|_| Ok(r#"{"Responder":"500"}"#.into())).collect()),
    ]);
    let summary = PreparedRun::load(cfg).unwrap().run(&backend, &RunOptions::default()).unwrap();
    assert_eq!(summary.total_entries, 10);
    assert_eq!(summary.failures, 3);
    assert!(summary.degraded);

    let log = RunLog::read(&summary.log_path).unwrap();
    let by_index: Vec<usize> = log.entries.iter().map(|e| e.agent_index).collect();
    assert_eq!(by_index, (0..10).collect::<Vec<_>>(), "entries are written in index order");

    let e1 = &log.entries[1];
    assert_eq!(e1.parsed, Parsed::Offer { offer: ultimatum_sim::GameConfig::default().validate_offer(45).unwrap(), proposer_coins: Some(55) });
    assert_eq!(e1.attempt_count, 2);
    assert_eq!(e1.warnings, vec!["re-asked after 1 malformed response(s)".to_string()]);

    let kind = |i: usize| match &log.entries[i].parsed {
        Parsed::Failure { kind, .. } => Some(*kind),
        _ => None,
    };
    assert_eq!(kind(2), Some(FailureKind::ParseFailure));
    assert_eq!(log.entries[2].attempt_count, 4);
    assert_eq!(log.entries[2].raw_response.as_deref(), Some("x"));
    assert_eq!(kind(3), Some(FailureKind::TransportFailure));
    assert_eq!(log.entries[3].raw_response, None);
    assert_eq!(log.entries[3].attempt_count, 5);
    assert_eq!(kind(4), Some(FailureKind::RangeFailure));
    assert_eq!(log.offers().len(), 7);
}

#[test]
fn auth_failure_aborts_and_leaves_resumable_log() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 6);
    let mut cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 6);
    cfg.concurrency_limit = 1;
    let backend = ScriptedBackend::new(vec![(3, vec![Err(BackendError::Auth("HTTP 401".into()))])]);
    let err = PreparedRun::load(cfg.clone()).unwrap().run(&backend, &RunOptions::default());
    assert!(matches!(err, Err(RunError::Backend(BackendError::Auth(_)))));
    let log = RunLog::read(cfg.log_path()).unwrap();
    assert_eq!(log.completed_indices().into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
    // the script for agent 3 is used up, so a resume now completes
    let s = PreparedRun::load(cfg).unwrap().run(&backend, &RunOptions::default()).unwrap();
    assert_eq!((s.new_entries, s.total_entries), (3, 6));
}

#[test]
fn replay_reproduces_recorded_run() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 8);
    let mut cfg = config(dir.path(), "orig", Role::Proposer, PersonaCondition::SixTraits, 8);
    let backend = ScriptedBackend::new(vec![
        (0, vec![Ok("Sure! {\"Reason\":\"x\",\"Responder\":60,\"Proposer\":60}".into())]),
        (5, vec![transport()]),
        (6, (0..4).map(|_| Ok("nope".into())).collect()),
    ]);
    let recorded = PreparedRun::load(cfg.clone()).unwrap().run(&backend, &RunOptions::default()).unwrap();
    let recorded = RunLog::read(recorded.log_path).unwrap();

    let replay = ReplayBackend::from_log(&recorded);
    assert_eq!(replay.len(), 8);
    cfg.run_id = "replayed".into();
    let replayed = PreparedRun::load(cfg).unwrap().run(&replay, &RunOptions::default()).unwrap();
    let replayed = RunLog::read(replayed.log_path).unwrap();
    for (a, b) in recorded.entries.iter().zip(&replayed.entries) {
        assert_eq!(a.parsed, b.parsed);
        assert_eq!(a.raw_response, b.raw_response);
        assert_eq!(a.prompt_hash, b.prompt_hash);
        assert_eq!(a.warnings, b.warnings);
    }
}

#[test]
fn replay_miss_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    zero_personas_csv(dir.path(), 2);
    let cfg = config(dir.path(), "p", Role::Proposer, PersonaCondition::NoPersona, 2);
    let s = PreparedRun::load(cfg.clone()).unwrap().run(&synthetic(), &RunOptions::default()).unwrap();
    let log = RunLog::read(s.log_path).unwrap();
    let replay = ReplayBackend::from_log(&log);

    let persona = PersonaRecord::neutral("z0");
    let prompt = ultimatum_sim::prompting::render_agent_prompt(&persona, PersonaCondition::SixTraits, RoleQuery::Proposer, &Default::default());
    let req = CompletionRequest {
        prompt: &prompt,
        prompt_hash: prompt.hash(),
        model_name: "m".into(),
        temperature: 0.0,
        max_output_tokens: 10,
        request_tag: "t".into(),
        agent: AgentContext { agent_index: 0, persona: &persona, role: RoleQuery::Proposer },
    };
    match replay.complete(&req) {
        Err(BackendError::ReplayMiss { prompt_hash, agent_index }) => {
            assert_eq!(prompt_hash, prompt.hash());
            assert_eq!(agent_index, 0);
        }
        other => panic!("{other:?}"),
    }
    // replaying the same request twice gives identical bytes
    let hit_prompt = ultimatum_sim::prompting::render_agent_prompt(&persona, PersonaCondition::NoPersona, RoleQuery::Proposer, &Default::default());
    let hit = CompletionRequest { prompt: &hit_prompt, prompt_hash: hit_prompt.hash(), ..req };
    assert_eq!(replay.complete(&hit).unwrap().raw_text, replay.complete(&hit).unwrap().raw_text);
}
