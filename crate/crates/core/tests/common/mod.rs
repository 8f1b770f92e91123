#![allow(dead_code)]

pub mod corpus;

use std::path::PathBuf;

use ultimatum_sim::persona::{load_personas_from_path, PersonaRecord, PersonaSchema};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_personas() -> Vec<PersonaRecord> {
    load_personas_from_path(fixture("personas_1000.csv"), &PersonaSchema::default()).unwrap()
}

/// Compare against a golden file. With `BLESS=1` a missing golden is written
/// instead; existing goldens are never overwritten.
pub fn assert_golden(name: &str, actual: &str) {
    let path = fixture(name);
    if !path.exists() && std::env::var_os("BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        panic!("{} differs from rendered output at {line}\n--- actual ---\n{actual}", path.display());
    }
}

/// Mean cost of the minimum-cost perfect matching between equal-size samples under |x - y|,
/// by dynamic programming over subsets of `b`. Exact, O(n 2^n).
pub fn min_cost_matching_dp(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len());
    assert!(n <= 16);
    let full = 1usize << n;
    let mut best = vec![f64::INFINITY; full];
    best[0] = 0.0;
    for mask in 0..full {
        if best[mask].is_infinite() {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == n {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                let c = best[mask] + (a[i] - bj).abs();
                if c < best[next] {
                    best[next] = c;
                }
            }
        }
    }
    best[full - 1] / n as f64
}

/// Hungarian algorithm (shortest augmenting paths), O(n^3). Returns the mean
/// cost of the optimal assignment under |x - y|.
pub fn min_cost_assignment_hungarian(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len());
    let cost = |i: usize, j: usize| (a[i - 1] - b[j - 1]).abs();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let total: f64 = (1..=n).map(|j| cost(p[j], j)).sum();
    total / n as f64
}

/// W1 for unequal sizes by replicating each sample lcm/len times and matching
/// sorted lists; independent of the breakpoint walk.
pub fn w1_by_replication(a: &[f64], b: &[f64]) -> f64 {
    fn gcd(x: usize, y: usize) -> usize {
        if y == 0 { x } else { gcd(y, x % y) }
    }
    let l = a.len() / gcd(a.len(), b.len()) * b.len();
    let expand = |v: &[f64]| {
        let mut out: Vec<f64> = v.iter().flat_map(|x| std::iter::repeat_n(*x, l / v.len())).collect();
        out.sort_by(f64::total_cmp);
        out
    };
    let (ea, eb) = (expand(a), expand(b));
    ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).sum::<f64>() / l as f64
}

pub fn human_benchmark() -> ultimatum_sim::eval::HumanBenchmark {
    ultimatum_sim::eval::HumanBenchmark::load(
        fixture("human_proposer.txt"),
        fixture("human_responder.csv"),
        &ultimatum_sim::GameConfig::default(),
    )
    .unwrap()
}

/// The recorded fixture-llm logs, in file-name order.
pub fn recorded_logs() -> Vec<ultimatum_sim::runlog::RunLog> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture("recorded"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| ultimatum_sim::runlog::RunLog::read(p).unwrap()).collect()
}

/// Re-run every recorded log through the replay backend into `out_dir`.
pub fn replay_recorded(out_dir: &std::path::Path) -> Vec<ultimatum_sim::runlog::RunLog> {
    use ultimatum_sim::backend::ReplayBackend;
    use ultimatum_sim::runner::{PreparedRun, RunConfig, RunOptions};
    use ultimatum_sim::Role;

    recorded_logs()
        .into_iter()
        .map(|log| {
            let h = &log.header;
            let config = RunConfig {
                run_id: h.run_id.clone(),
                role: h.role,
                condition: h.condition,
                n_agents: h.n_agents,
                persona_source: fixture("personas_1000.csv"),
                offers_source: (h.role == Role::Responder).then(|| fixture("recorded/responder_offers_200.txt")),
                out_dir: out_dir.to_path_buf(),
                concurrency_limit: 4,
                ..Default::default()
            };
            let summary = PreparedRun::load(config)
                .unwrap()
                .run(&ReplayBackend::from_log(&log), &RunOptions::default())
                .unwrap();
            ultimatum_sim::runlog::RunLog::read(summary.log_path).unwrap()
        })
        .collect()
}
