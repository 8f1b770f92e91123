use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ultimatum_sim::backend::HttpSettings;
use ultimatum_sim::eval::{build_report, emit_figure_data, group_runs, proposer_distance, responder_log_distance, HumanBenchmark};
use ultimatum_sim::game::{GameConfig, Role};
use ultimatum_sim::persona::{load_personas_from_path, Indicator, PersonaCondition, PersonaSchema};
use ultimatum_sim::runlog::RunLog;
use ultimatum_sim::runner::{run_from_config, BackendConfig, ReplaySettings, RunConfig, RunOptions, SyntheticSettings};

#[derive(Parser)]
#[command(name = "ultimatum", version, about = "Persona-conditioned ultimatum game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a persona microdata file against the schema and print a summary.
    ValidateData(ValidateArgs),
    /// Run one or more experiments and write JSONL run logs.
    Simulate(SimulateArgs),
    /// Print alignment distances for run logs against a human benchmark.
    Evaluate(EvaluateArgs),
    /// Build the distance table and figure-data CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    personas: Option<PathBuf>,
    /// Run config to take the persona path and schema from.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    delimiter: Option<char>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Openai,
    Synthetic,
    Replay,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// proposer, responder or both
    #[arg(long)]
    role: Option<String>,
    /// none, six, twenty-one or all
    #[arg(long)]
    condition: Option<String>,
    #[arg(long = "n")]
    n_agents: Option<usize>,
    #[arg(long)]
    run_id: Option<String>,
    /// Continue an interrupted run; fails if no log exists.
    #[arg(long)]
    resume: bool,
    /// Discard existing logs with the same run id.
    #[arg(long, conflicts_with = "resume")]
    overwrite: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    personas: Option<PathBuf>,
    #[arg(long)]
    offers: Option<PathBuf>,
    /// Recorded log for the replay backend.
    #[arg(long)]
    replay_log: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Stop after this many new agents (the log stays resumable).
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Human proposer offers, one integer per line.
    #[arg(long)]
    human_proposer: PathBuf,
    /// Human responder observations, `offer,decision` per line.
    #[arg(long)]
    human_responder: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long = "log", required = true)]
    logs: Vec<PathBuf>,
    #[command(flatten)]
    human: BenchmarkArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "log")]
    logs: Vec<PathBuf>,
    /// Directory whose *.jsonl files are all included.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    #[command(flatten)]
    human: BenchmarkArgs,
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ValidateData(a) => validate_data(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn validate_data(args: ValidateArgs) -> Result<()> {
    let (path, mut schema) = match (&args.personas, &args.config) {
        (Some(p), cfg) => {
            let schema = match cfg {
                Some(c) => RunConfig::from_file(c)?.persona_schema,
                None => PersonaSchema::default(),
            };
            (p.clone(), schema)
        }
        (None, Some(c)) => {
            let cfg = RunConfig::from_file(c)?;
            (cfg.persona_source, cfg.persona_schema)
        }
        (None, None) => bail!("pass --personas or --config"),
    };
    if args.delimiter.is_some() {
        schema.delimiter = args.delimiter;
    }
    let records = load_personas_from_path(&path, &schema).with_context(|| format!("validating {}", path.display()))?;
    println!("{}: {} personas, all invariants hold", path.display(), records.len());
    println!("{:<30} {:>10} {:>10} {:>10} {:>10}", "indicator", "mean", "sd", "min", "max");
    for ind in Indicator::ALL {
        let vals: Vec<f64> = records.iter().map(|r| r.value(ind)).collect();
        let n = vals.len().max(1) as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{:<30} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", ind.label(), mean, sd, min, max);
    }
    let mut crt = [0usize; 4];
    for r in &records {
        crt[usize::from(r.crt_score)] += 1;
    }
    println!("crt_score counts 0..3: {crt:?}");
    Ok(())
}

fn expand<T: Copy>(raw: Option<&str>, all_words: &[&str], all: &[T], parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<Vec<T>>> {
    match raw {
        None => Ok(None),
        Some(s) if all_words.contains(&s.to_ascii_lowercase().as_str()) => Ok(Some(all.to_vec())),
        Some(s) => Ok(Some(vec![parse(s).map_err(anyhow::Error::msg)?])),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut base = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig {
            run_id: String::new(),
            ..RunConfig::default()
        },
    };
    if let Some(kind) = args.backend {
        let same = matches!(
            (kind, &base.backend),
            (BackendKind::Openai, BackendConfig::Openai(_))
                | (BackendKind::Synthetic, BackendConfig::Synthetic(_))
                | (BackendKind::Replay, BackendConfig::Replay(_))
        );
        if !same {
            base.backend = match kind {
                BackendKind::Openai => BackendConfig::Openai(HttpSettings::default()),
                BackendKind::Synthetic => BackendConfig::Synthetic(SyntheticSettings::default()),
                BackendKind::Replay => BackendConfig::Replay(ReplaySettings {
                    log: args.replay_log.clone().context("--backend replay needs --replay-log")?,
                }),
            };
        }
    }
    if let (Some(log), BackendConfig::Replay(r)) = (&args.replay_log, &mut base.backend) {
        r.log = log.clone();
    }
    if let Some(model) = &args.model {
        match &mut base.backend {
            BackendConfig::Openai(s) => s.model = model.clone(),
            BackendConfig::Synthetic(s) => s.model_name = model.clone(),
            BackendConfig::Replay(_) => bail!("--model does not apply to the replay backend"),
        }
    }
    if let Some(n) = args.n_agents {
        base.n_agents = n;
    }
    if let Some(p) = &args.personas {
        base.persona_source = p.clone();
    }
    if let Some(p) = &args.offers {
        base.offers_source = Some(p.clone());
    }
    if let Some(d) = &args.out_dir {
        base.out_dir = d.clone();
    }
    if let Some(c) = args.concurrency {
        base.concurrency_limit = c;
    }

    let roles = expand(args.role.as_deref(), &["both", "all"], &[Role::Proposer, Role::Responder], |s| s.parse())?;
    let conditions = expand(args.condition.as_deref(), &["all"], &PersonaCondition::ALL, |s| s.parse())?;
    let multi = roles.as_ref().is_some_and(|v| v.len() > 1) || conditions.as_ref().is_some_and(|v| v.len() > 1);
    let roles = roles.unwrap_or_else(|| vec![base.role]);
    let conditions = conditions.unwrap_or_else(|| vec![base.condition]);

    let stem = args.run_id.clone().unwrap_or_else(|| base.run_id.clone());
    let options = RunOptions {
        require_existing: args.resume,
        overwrite: args.overwrite,
        stop_after: args.stop_after,
    };
    for &condition in &conditions {
        for &role in &roles {
            let mut cfg = base.clone();
            cfg.role = role;
            cfg.condition = condition;
            cfg.run_id = match (stem.is_empty(), multi) {
                (true, _) => format!("{}-{}-{}", model_of(&cfg.backend), condition.key(), role),
                (false, true) => format!("{stem}-{}-{}", condition.key(), role),
                (false, false) => stem.clone(),
            };
            let summary = run_from_config(cfg, &options)?;
            println!(
                "{}: {} entries ({} new), {} failed{}{}",
                summary.log_path.display(),
                summary.total_entries,
                summary.new_entries,
                summary.failures,
                if summary.complete { "" } else { ", incomplete" },
                if summary.degraded { ", DEGRADED" } else { "" },
            );
        }
    }
    Ok(())
}

fn model_of(backend: &BackendConfig) -> String {
    match backend {
        BackendConfig::Openai(s) => ultimatum_sim::eval::model_slug(&s.model),
        BackendConfig::Synthetic(s) => ultimatum_sim::eval::model_slug(&s.model_name),
        BackendConfig::Replay(_) => "replay".into(),
    }
}

fn load_benchmark(args: &BenchmarkArgs) -> Result<HumanBenchmark> {
    Ok(HumanBenchmark::load(&args.human_proposer, &args.human_responder, &GameConfig::default())?)
}

fn read_logs(paths: &[PathBuf]) -> Result<Vec<RunLog>> {
    paths
        .iter()
        .map(|p| RunLog::read(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let human = load_benchmark(&args.human)?;
    let game = GameConfig::default();
    println!("run_id,model,condition,role,distance,parsed,failures");
    for log in read_logs(&args.logs)? {
        let h = &log.header;
        let distance = match h.role {
            Role::Proposer => proposer_distance(&log, &human, &game)?,
            Role::Responder => responder_log_distance(&log, &human)?,
        };
        let failures = log.failure_count();
        println!(
            "{},{},{},{},{},{},{}",
            h.run_id,
            h.model_name,
            h.condition.key(),
            h.role,
            distance,
            log.entries.len() - failures,
            failures
        );
    }
    Ok(())
}

fn logs_in_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn report(args: ReportArgs) -> Result<()> {
    let mut paths = args.logs.clone();
    if let Some(dir) = &args.log_dir {
        paths.extend(logs_in_dir(dir)?);
    }
    if paths.is_empty() {
        bail!("no run logs given (use --log or --log-dir)");
    }
    let human = load_benchmark(&args.human)?;
    let runs = group_runs(read_logs(&paths)?)?;
    let report = build_report(&runs, &human, &GameConfig::default())?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let table = report.to_table();
    for (name, body) in [("report.csv", report.to_csv()), ("report.md", table.clone())] {
        let path = args.out_dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    emit_figure_data(&runs, &human, &args.out_dir)?;
    print!("{table}");
    Ok(())
}
