//! The three repair engines and their shared driver.
//!
//! [`repair`] checks the bundle, localizes faults, hands the ranking to the
//! selected engine and re-validates whatever patch comes back from scratch.

mod genprog;
mod kali;
mod nopol;
pub mod synth;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::exec::{
    detect_flaky, run_suite, suite_passes, ForcingPolicy, TestResult, DEFAULT_STEP_BUDGET,
};
use crate::faultloc::{build_spectrum, rank, MetricKind, Ranking, SpectrumRow};
use crate::harness::BugBundle;
use crate::lang::{apply_patch, EngineKind, Patch, Program, StatementId, StmtKind};

pub use genprog::fitness;
pub use synth::{synthesize_condition, Atom, Cond, SynthesisFailure, SynthesisInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenProgConfig {
    pub population: usize,
    pub tournament: usize,
    pub crossover_prob: f64,
    pub max_edits_per_variant: usize,
    pub max_generations: usize,
}

impl Default for GenProgConfig {
    fn default() -> Self {
        GenProgConfig {
            population: 40,
            tournament: 2,
            crossover_prob: 0.5,
            max_edits_per_variant: 3,
            max_generations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NopolConfig {
    pub forcing: ForcingPolicy,
    pub max_expr_size: usize,
    pub constant_pool_extra: Vec<i64>,
    /// Upper bound on how many combinations of angelic traces (one per
    /// failing test) are tried at one site.
    pub max_combinations: usize,
}

impl Default for NopolConfig {
    fn default() -> Self {
        NopolConfig {
            forcing: ForcingPolicy::Uniform,
            max_expr_size: 7,
            constant_pool_extra: Vec::new(),
            max_combinations: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KaliConfig {
    pub enable_force_true: bool,
    pub enable_force_false: bool,
    pub enable_early_return: bool,
}

impl Default for KaliConfig {
    fn default() -> Self {
        KaliConfig {
            enable_force_true: true,
            enable_force_false: true,
            enable_early_return: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepairConfig {
    pub seed: u64,
    pub timeout_ms: u64,
    pub metric: MetricKind,
    pub step_budget: u64,
    pub flaky_repetitions: u32,
    pub genprog: GenProgConfig,
    pub nopol: NopolConfig,
    pub kali: KaliConfig,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            seed: 0,
            timeout_ms: 60_000,
            metric: MetricKind::Ochiai,
            step_budget: DEFAULT_STEP_BUDGET,
            flaky_repetitions: 3,
            genprog: GenProgConfig::default(),
            nopol: NopolConfig::default(),
            kali: KaliConfig::default(),
        }
    }
}

impl RepairConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.timeout_ms == 0 {
            return Err("timeout must be positive".into());
        }
        if self.genprog.population < 2 {
            return Err("population must be at least 2".into());
        }
        if self.genprog.tournament == 0 || self.genprog.max_edits_per_variant == 0 {
            return Err("tournament size and max edits must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.genprog.crossover_prob) {
            return Err("crossover probability must be within [0, 1]".into());
        }
        if self.nopol.max_expr_size == 0 {
            return Err("max expression size must be at least 1".into());
        }
        if self.step_budget == 0 || self.flaky_repetitions < 2 {
            return Err("step budget must be positive and flaky repetitions at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RepairStatus {
    PatchFound { patch: Patch },
    NoPatch,
    Timeout,
    Error { message: String },
    FlakyAbort { tests: Vec<String> },
}

impl RepairStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RepairStatus::PatchFound { .. } => "patch_found",
            RepairStatus::NoPatch => "no_patch",
            RepairStatus::Timeout => "timeout",
            RepairStatus::Error { .. } => "error",
            RepairStatus::FlakyAbort { .. } => "flaky_abort",
        }
    }

    pub fn patch(&self) -> Option<&Patch> {
        match self {
            RepairStatus::PatchFound { patch } => Some(patch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    #[serde(flatten)]
    pub status: RepairStatus,
    pub attempt_wall_time_ms: u64,
    pub variants_evaluated: u64,
}

/// What an engine's search ended with.
pub(crate) enum SearchEnd {
    Found(Patch),
    Exhausted,
    OutOfTime,
}

/// State shared by the engines during one attempt.
pub(crate) struct Search<'a> {
    pub bundle: &'a BugBundle,
    pub config: &'a RepairConfig,
    pub engine: EngineKind,
    pub spectrum: Vec<SpectrumRow>,
    pub ranking: Ranking,
    pub variants_evaluated: u64,
    deadline: Instant,
}

impl<'a> Search<'a> {
    pub fn program(&self) -> &'a Program {
        &self.bundle.program
    }

    pub fn expired(&self) -> bool {
        Instant::now() >= self.deadline
    }

    /// Suspicious statements (executed by a failing test) in ranking order.
    pub fn suspicious(&self) -> Vec<StatementId> {
        let failing: BTreeSet<StatementId> = self
            .spectrum
            .iter()
            .filter(|r| r.ef > 0)
            .map(|r| r.statement)
            .collect();
        self.ranking
            .ids()
            .filter(|id| failing.contains(id))
            .collect()
    }

    pub fn patch(&self, edits: Vec<crate::lang::Edit>) -> Patch {
        Patch::new(self.engine, self.config.seed, edits)
    }

    /// Applies and runs a candidate against the whole suite, counting it as
    /// one evaluated variant.
    pub fn passes(&mut self, patch: &Patch) -> bool {
        self.variants_evaluated += 1;
        match apply_patch(self.program(), patch) {
            Ok(candidate) => suite_passes(&candidate, &self.bundle.tests, self.config.step_budget),
            Err(_) => false,
        }
    }
}

/// Whether a statement kind is a conditional that engines may rewrite.
pub(crate) fn is_if(program: &Program, id: StatementId) -> bool {
    matches!(
        program.statement(id).map(|s| &s.kind),
        Some(StmtKind::If { .. })
    )
}

/// Runs one repair attempt. Stops at the first patch that passes the whole
/// suite; the patch is re-validated independently before being reported.
pub fn repair(bundle: &BugBundle, engine: EngineKind, config: &RepairConfig) -> RepairOutcome {
    let start = Instant::now();
    let deadline = start + Duration::from_millis(config.timeout_ms);
    let elapsed = || start.elapsed().as_millis() as u64;
    let finish = |status, variants_evaluated| RepairOutcome {
        status,
        attempt_wall_time_ms: elapsed(),
        variants_evaluated,
    };

    if let Err(message) = config.check() {
        return finish(RepairStatus::Error { message }, 0);
    }

    let results: Vec<TestResult> = run_suite(&bundle.program, &bundle.tests, config.step_budget);
    let already_passing: Vec<&str> = results
        .iter()
        .zip(&bundle.tests)
        .filter(|(r, t)| t.declared_failing && r.passed())
        .map(|(r, _)| r.test.as_str())
        .collect();
    if !already_passing.is_empty() {
        let message = format!(
            "declared failing tests pass: {}",
            already_passing.join(", ")
        );
        return finish(RepairStatus::Error { message }, 0);
    }

    let flaky = detect_flaky(
        &bundle.program,
        &bundle.tests,
        config.step_budget,
        config.flaky_repetitions,
    );
    if !flaky.is_empty() {
        return finish(
            RepairStatus::FlakyAbort {
                tests: flaky.into_iter().collect(),
            },
            0,
        );
    }

    let spectrum = build_spectrum(&results);
    let ranking = rank(&spectrum, config.metric);
    let mut search = Search {
        bundle,
        config,
        engine,
        spectrum,
        ranking,
        variants_evaluated: 0,
        deadline,
    };
    if search.expired() {
        return finish(RepairStatus::Timeout, 0);
    }

    let end = match engine {
        EngineKind::Kali => kali::search(&mut search),
        EngineKind::GenProg => genprog::search(&mut search),
        EngineKind::Nopol => nopol::search(&mut search),
    };
    let evaluated = search.variants_evaluated;
    let status = match end {
        SearchEnd::Found(mut patch) => match revalidate(bundle, &patch, config.step_budget) {
            Ok(()) => {
                patch.search_wall_time_ms = elapsed();
                RepairStatus::PatchFound { patch }
            }
            Err(message) => RepairStatus::Error { message },
        },
        SearchEnd::Exhausted => RepairStatus::NoPatch,
        SearchEnd::OutOfTime => RepairStatus::Timeout,
    };
    finish(status, evaluated)
}

/// Applies `patch` to the bundle program and runs every test from scratch.
pub fn revalidate(bundle: &BugBundle, patch: &Patch, budget: u64) -> Result<(), String> {
    let patched = apply_patch(&bundle.program, patch).map_err(|e| e.to_string())?;
    let failing: Vec<String> = run_suite(&patched, &bundle.tests, budget)
        .into_iter()
        .filter(|r| !r.passed())
        .map(|r| r.test)
        .collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(format!(
            "patch fails re-validation on {}",
            failing.join(", ")
        ))
    }
}
