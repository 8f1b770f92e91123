//! Alignment between simulated and human play: distances, the summary table
//! and the data behind the offer histogram and acceptance bubble plots.

mod benchmark;
mod curve;
mod wasserstein;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use benchmark::{parse_responder_observations, HumanBenchmark};
pub use curve::{responder_distance, AcceptanceCurve, CurveError, CurvePoint};
pub use wasserstein::{wasserstein1, DistributionError, EmpiricalDistribution};

use crate::game::{GameConfig, Offer, Role};
use crate::persona::PersonaCondition;
use crate::runlog::RunLog;

/// Presentation multiplier for distances in the summary table.
pub const DISPLAY_SCALE: f64 = 100.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("run {run_id} has no parsed {what}")]
    NothingParsed { run_id: String, what: &'static str },
    #[error("two {role} logs for model {model:?} condition {condition}")]
    DuplicateRun {
        model: String,
        condition: PersonaCondition,
        role: Role,
    },
    #[error("{0}")]
    Benchmark(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn fractions(offers: &[Offer], game: &GameConfig) -> Vec<f64> {
    offers.iter().map(|o| o.fraction(game)).collect()
}

/// W1 between parsed simulated offers and human offers, both as pie fractions.
pub fn proposer_distance(log: &RunLog, human: &HumanBenchmark, game: &GameConfig) -> Result<f64, EvalError> {
    let offers = log.offers();
    if offers.is_empty() {
        return Err(EvalError::NothingParsed {
            run_id: log.header.run_id.clone(),
            what: "offers",
        });
    }
    let sim = EmpiricalDistribution::new(fractions(&offers, game))?;
    let hum = EmpiricalDistribution::new(fractions(&human.proposer_offers, game))?;
    Ok(wasserstein1(&sim, &hum))
}

pub fn responder_log_distance(log: &RunLog, human: &HumanBenchmark) -> Result<f64, EvalError> {
    let obs = log.responder_observations();
    if obs.is_empty() {
        return Err(EvalError::NothingParsed {
            run_id: log.header.run_id.clone(),
            what: "decisions",
        });
    }
    let sim = AcceptanceCurve::from_observations(&obs)?;
    let hum = AcceptanceCurve::from_observations(&human.responder_observations)?;
    Ok(responder_distance(&sim, &hum)?)
}

/// The logs for one (model, condition) cell.
#[derive(Debug, Clone)]
pub struct ConditionRuns {
    pub model: String,
    pub condition: PersonaCondition,
    pub proposer: Option<RunLog>,
    pub responder: Option<RunLog>,
}

/// Group logs by (model, condition) using their headers. Models keep their
/// first-seen order; conditions are sorted none, six, twenty-one.
pub fn group_runs(logs: Vec<RunLog>) -> Result<Vec<ConditionRuns>, EvalError> {
    let mut models: Vec<String> = Vec::new();
    let mut cells: Vec<ConditionRuns> = Vec::new();
    for log in logs {
        let (model, condition, role) = (log.header.model_name.clone(), log.header.condition, log.header.role);
        if !models.contains(&model) {
            models.push(model.clone());
        }
        let idx = match cells.iter().position(|c| c.model == model && c.condition == condition) {
            Some(i) => i,
            None => {
                cells.push(ConditionRuns {
                    model: model.clone(),
                    condition,
                    proposer: None,
                    responder: None,
                });
                cells.len() - 1
            }
        };
        let slot = match role {
            Role::Proposer => &mut cells[idx].proposer,
            Role::Responder => &mut cells[idx].responder,
        };
        if slot.is_some() {
            return Err(EvalError::DuplicateRun { model, condition, role });
        }
        *slot = Some(log);
    }
    let cond_rank = |c: PersonaCondition| PersonaCondition::ALL.iter().position(|x| *x == c).unwrap_or(0);
    cells.sort_by_key(|c| (models.iter().position(|m| *m == c.model).unwrap_or(0), cond_rank(c.condition)));
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub condition: PersonaCondition,
    pub proposer_distance: Option<f64>,
    pub responder_distance: Option<f64>,
    pub proposer_failures: usize,
    pub responder_failures: usize,
}

/// Distances are stored unscaled; [`DISPLAY_SCALE`] is applied only when rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub rows: Vec<ReportRow>,
}

pub fn build_report(runs: &[ConditionRuns], human: &HumanBenchmark, game: &GameConfig) -> Result<AlignmentReport, EvalError> {
    let rows = runs
        .iter()
        .map(|r| {
            Ok(ReportRow {
                model: r.model.clone(),
                condition: r.condition,
                proposer_distance: r.proposer.as_ref().map(|l| proposer_distance(l, human, game)).transpose()?,
                responder_distance: r.responder.as_ref().map(|l| responder_log_distance(l, human)).transpose()?,
                proposer_failures: r.proposer.as_ref().map_or(0, RunLog::failure_count),
                responder_failures: r.responder.as_ref().map_or(0, RunLog::failure_count),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(AlignmentReport { rows })
}

/// Three significant digits, no exponent.
fn format_sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.2}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl AlignmentReport {
    pub fn display_value(stored: f64) -> f64 {
        stored * DISPLAY_SCALE
    }

    /// Unscaled distances at full precision plus failure counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,condition,proposer_distance,responder_distance,proposer_failures,responder_failures\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_cell(&r.model),
                r.condition.key(),
                format_opt(r.proposer_distance),
                format_opt(r.responder_distance),
                r.proposer_failures,
                r.responder_failures
            )
            .unwrap();
        }
        out
    }

    /// Markdown table: one block of rows per model, distances ×10^2 to three
    /// significant digits, each model's lowest value per column in bold.
    pub fn to_table(&self) -> String {
        let mut out = String::from("| Model | Persona | Proposer | Responder |\n|---|---|---|---|\n");
        let mut models: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !models.contains(&r.model.as_str()) {
                models.push(&r.model);
            }
        }
        for model in &models {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.model == *model).collect();
            let min = |get: fn(&ReportRow) -> Option<f64>| {
                rows.iter().filter_map(|r| get(r)).fold(f64::INFINITY, f64::min)
            };
            let pmin = min(|r| r.proposer_distance);
            let rmin = min(|r| r.responder_distance);
            let cell = |v: Option<f64>, best: f64| match v {
                None => "-".to_string(),
                Some(x) if x == best => format!("**{}**", format_sig3(Self::display_value(x))),
                Some(x) => format_sig3(Self::display_value(x)),
            };
            for r in rows {
                writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    r.model,
                    r.condition.display_name(),
                    cell(r.proposer_distance, pmin),
                    cell(r.responder_distance, rmin)
                )
                .unwrap();
            }
        }
        out.push_str("\nWasserstein distances to human play, values ×10^2; bold marks each model's lowest.\n");
        let failed: Vec<String> = self
            .rows
            .iter()
            .filter(|r| r.proposer_failures + r.responder_failures > 0)
            .map(|r| {
                format!(
                    "{} / {}: {} proposer, {} responder agents failed",
                    r.model,
                    r.condition.display_name(),
                    r.proposer_failures,
                    r.responder_failures
                )
            })
            .collect();
        if !failed.is_empty() {
            out.push_str("Excluded failures:\n");
            for f in failed {
                writeln!(out, "- {f}").unwrap();
            }
        }
        out
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// File-name-safe form of a model name.
pub fn model_slug(model: &str) -> String {
    model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Histogram rows: offer, human count, then one count per condition present.
pub fn proposer_histogram_csv(model_runs: &[&ConditionRuns], human: &HumanBenchmark) -> String {
    let mut counts: std::collections::BTreeMap<u32, Vec<u64>> = Default::default();
    let cols = model_runs.len() + 1;
    let mut bump = |offer: Offer, col: usize| counts.entry(offer.coins()).or_insert_with(|| vec![0; cols])[col] += 1;
    for o in &human.proposer_offers {
        bump(*o, 0);
    }
    for (k, run) in model_runs.iter().enumerate() {
        for o in run.proposer.iter().flat_map(RunLog::offers) {
            bump(o, k + 1);
        }
    }
    let mut out = String::from("offer,human_count");
    for run in model_runs {
        write!(out, ",{}", run.condition.key()).unwrap();
    }
    out.push('\n');
    for (offer, row) in counts {
        write!(out, "{offer}").unwrap();
        for c in row {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Bubble rows: offer, source, acceptance rate, count; offers ascending,
/// human first within an offer.
pub fn responder_bubbles_csv(model_runs: &[&ConditionRuns], human: &HumanBenchmark) -> Result<String, EvalError> {
    let mut curves = vec![("human", AcceptanceCurve::from_observations(&human.responder_observations)?)];
    for run in model_runs {
        if let Some(log) = &run.responder {
            let obs = log.responder_observations();
            if !obs.is_empty() {
                curves.push((run.condition.key(), AcceptanceCurve::from_observations(&obs)?));
            }
        }
    }
    let mut offers: Vec<u32> = curves.iter().flat_map(|(_, c)| c.points().map(|(o, _)| o)).collect();
    offers.sort_unstable();
    offers.dedup();
    let mut out = String::from("offer,source,acceptance_rate,count\n");
    for offer in offers {
        for (source, curve) in &curves {
            if let Some(p) = curve.get(offer) {
                writeln!(out, "{offer},{source},{},{}", p.rate(), p.count).unwrap();
            }
        }
    }
    Ok(out)
}

/// Write `proposer_hist_<model>.csv` and `responder_bubbles_<model>.csv` for
/// every model. Returns the paths written.
pub fn emit_figure_data(runs: &[ConditionRuns], human: &HumanBenchmark, out_dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |path: &Path, source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let mut models: Vec<&str> = Vec::new();
    for r in runs {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut written = Vec::new();
    for model in models {
        let model_runs: Vec<&ConditionRuns> = runs.iter().filter(|r| r.model == model).collect();
        let slug = model_slug(model);
        let files = [
            (format!("proposer_hist_{slug}.csv"), proposer_histogram_csv(&model_runs, human)),
            (format!("responder_bubbles_{slug}.csv"), responder_bubbles_csv(&model_runs, human)?),
        ];
        for (name, body) in files {
            let path = out_dir.join(name);
            std::fs::write(&path, body).map_err(|e| io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
