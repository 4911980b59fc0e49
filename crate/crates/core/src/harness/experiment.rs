use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::engines::{repair, RepairConfig, RepairOutcome, RepairStatus};
use crate::lang::{apply_patch, diff, EngineKind};

use super::BugBundle;

/// Stack size of experiment worker threads; the interpreter recurses on
/// nested calls and expressions.
pub const WORKER_STACK_SIZE: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub bundles: Vec<BugBundle>,
    pub engines: Vec<EngineKind>,
    pub config: RepairConfig,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub bundle: String,
    pub engine: EngineKind,
    pub outcome: RepairOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_diff: Option<String>,
    /// Milliseconds since the Unix epoch.
    pub started_ms: u64,
    pub finished_ms: u64,
}

impl ExperimentRecord {
    /// The record with every wall-clock field zeroed, as JSON. Two runs of
    /// the same job agree on this byte for byte.
    pub fn fingerprint(&self) -> String {
        let mut r = self.clone();
        r.started_ms = 0;
        r.finished_ms = 0;
        r.outcome.attempt_wall_time_ms = 0;
        if let RepairStatus::PatchFound { patch } = &mut r.outcome.status {
            patch.search_wall_time_ms = 0;
        }
        serde_json::to_string(&r).expect("record serializes")
    }

    pub fn fixed(&self) -> bool {
        matches!(self.outcome.status, RepairStatus::PatchFound { .. })
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Runs one (bundle, engine) attempt. A panic inside the engine becomes an
/// `Error` outcome.
pub fn run_job(bundle: &BugBundle, engine: EngineKind, config: &RepairConfig) -> ExperimentRecord {
    let started_ms = now_ms();
    let outcome =
        catch_unwind(AssertUnwindSafe(|| repair(bundle, engine, config))).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "engine panicked".to_string());
            RepairOutcome {
                status: RepairStatus::Error { message },
                attempt_wall_time_ms: now_ms().saturating_sub(started_ms),
                variants_evaluated: 0,
            }
        });
    let patch_diff = outcome
        .status
        .patch()
        .and_then(|p| apply_patch(&bundle.program, p).ok())
        .map(|patched| diff(&bundle.program, &patched));
    ExperimentRecord {
        bundle: bundle.id.clone(),
        engine,
        outcome,
        patch_diff,
        started_ms,
        finished_ms: now_ms(),
    }
}

/// Runs every (bundle, engine) pair on a pool of `workers` threads. Records
/// come back sorted by bundle id, then engine, whatever the completion
/// order.
pub fn run_experiment(plan: &ExperimentPlan) -> Vec<ExperimentRecord> {
    let mut jobs: Vec<(&BugBundle, EngineKind)> = plan
        .bundles
        .iter()
        .flat_map(|b| plan.engines.iter().map(move |e| (b, *e)))
        .collect();
    jobs.sort_by(|a, b| a.0.id.cmp(&b.0.id).then(a.1.cmp(&b.1)));
    jobs.dedup_by(|a, b| a.0.id == b.0.id && a.1 == b.1);

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let workers = plan.workers.clamp(1, jobs.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, config) = (&jobs, &next, &plan.config);
            thread::Builder::new()
                .stack_size(WORKER_STACK_SIZE)
                .spawn_scoped(scope, move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some((bundle, engine)) = jobs.get(i) else {
                        break;
                    };
                    if tx.send((i, run_job(bundle, *engine, config))).is_err() {
                        break;
                    }
                })
                .expect("spawn worker");
        }
    });
    drop(tx);
    let mut records: Vec<(usize, ExperimentRecord)> = rx.into_iter().collect();
    records.sort_by_key(|(i, _)| *i);
    records.into_iter().map(|(_, r)| r).collect()
}

/// Writes `results.ndjson` and `patches/<bundle>-<engine>.diff` under `dir`.
pub fn write_experiment(dir: &Path, records: &[ExperimentRecord]) -> io::Result<()> {
    fs::create_dir_all(dir.join("patches"))?;
    let mut lines = String::new();
    for r in records {
        lines.push_str(&serde_json::to_string(r).map_err(io::Error::other)?);
        lines.push('\n');
        if let Some(d) = &r.patch_diff {
            fs::write(
                dir.join("patches")
                    .join(format!("{}-{}.diff", r.bundle, r.engine)),
                d,
            )?;
        }
    }
    fs::write(dir.join("results.ndjson"), lines)
}

/// Parses newline-delimited records; blank lines are ignored.
pub fn parse_records(text: &str) -> Result<Vec<ExperimentRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}
