//! Speculative execution with forced condition values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Program, StatementId, StmtKind};

use super::interp::{Machine, Probe, Tail};
use super::value::Snapshot;
use super::{NondetTape, TestCase, Verdict};

/// A point whose truth value can be forced: the condition of an existing
/// `if`/`while`, or an imaginary guard in front of any statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AngelicSite {
    Condition(StatementId),
    Guard(StatementId),
}

impl AngelicSite {
    pub fn statement(self) -> StatementId {
        match self {
            AngelicSite::Condition(id) | AngelicSite::Guard(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcingPolicy {
    /// The same constant at every evaluation: two runs.
    Uniform,
    /// Every combination over the first `k` evaluations; later evaluations
    /// keep their original value.
    PerOccurrence(u32),
    /// Exactly the given sequence, then original values.
    Replay(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngelicTrace {
    pub location: AngelicSite,
    pub forced_values: Vec<bool>,
    pub snapshots: Vec<Snapshot>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AngelicError {
    #[error("test never reaches {0:?}")]
    LocationNotExecuted(AngelicSite),
    #[error("{0:?} is not a condition or statement of the program")]
    InvalidLocation(AngelicSite),
}

fn probe_run(
    program: &Program,
    test: &TestCase,
    site: AngelicSite,
    prefix: Vec<bool>,
    tail: Tail,
    budget: u64,
) -> AngelicTrace {
    let tape = NondetTape::for_repetition(0);
    let mut machine = Machine::new(program, budget, &tape);
    machine.probe = Some(Probe::new(site, prefix, tail));
    let out = machine.run_test_body(&test.body);
    let probe = machine.probe.take().expect("probe");
    let (snapshots, forced_values) = probe.records.into_iter().unzip();
    AngelicTrace {
        location: site,
        forced_values,
        snapshots,
        verdict: out.verdict,
    }
}

fn check_site(program: &Program, site: AngelicSite) -> Result<(), AngelicError> {
    let valid = match (site, program.statement(site.statement())) {
        (AngelicSite::Condition(_), Some(s)) => {
            matches!(s.kind, StmtKind::If { .. } | StmtKind::While { .. })
        }
        (AngelicSite::Guard(_), Some(_)) => true,
        (_, None) => false,
    };
    if valid {
        Ok(())
    } else {
        Err(AngelicError::InvalidLocation(site))
    }
}

/// Runs the test unmodified while recording every evaluation at `site`
/// (a guard always evaluates to true). The trace is empty if the test never
/// reaches the site.
pub fn observe(
    program: &Program,
    test: &TestCase,
    site: AngelicSite,
    budget: u64,
) -> Result<AngelicTrace, AngelicError> {
    check_site(program, site)?;
    Ok(probe_run(
        program,
        test,
        site,
        Vec::new(),
        Tail::Original,
        budget,
    ))
}

/// Runs the test under forced values at `site` as dictated by `policy`.
pub fn run_angelic(
    program: &Program,
    test: &TestCase,
    site: AngelicSite,
    policy: &ForcingPolicy,
    budget: u64,
) -> Result<Vec<AngelicTrace>, AngelicError> {
    let seen = observe(program, test, site, budget)?;
    if seen.forced_values.is_empty() {
        return Err(AngelicError::LocationNotExecuted(site));
    }
    let run = |prefix: Vec<bool>, tail| probe_run(program, test, site, prefix, tail, budget);
    Ok(match policy {
        ForcingPolicy::Uniform => vec![
            run(Vec::new(), Tail::Constant(true)),
            run(Vec::new(), Tail::Constant(false)),
        ],
        ForcingPolicy::Replay(values) => vec![run(values.clone(), Tail::Original)],
        ForcingPolicy::PerOccurrence(0) => vec![seen],
        ForcingPolicy::PerOccurrence(k) => {
            let mut traces = Vec::new();
            explore(&run, Vec::new(), *k as usize, &mut traces);
            traces
        }
    })
}

/// Depth-first over forced prefixes, `true` before `false`. A prefix is
/// extended only while the site is evaluated beyond it and it is shorter
/// than `k`.
fn explore(
    run: &impl Fn(Vec<bool>, Tail) -> AngelicTrace,
    prefix: Vec<bool>,
    k: usize,
    out: &mut Vec<AngelicTrace>,
) {
    for b in [true, false] {
        let mut next = prefix.clone();
        next.push(b);
        let trace = run(next.clone(), Tail::Original);
        if trace.forced_values.len() > next.len() && next.len() < k {
            explore(run, next, k, out);
        } else {
            out.push(trace);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{parse_tests, DEFAULT_STEP_BUDGET};
    use crate::lang::parse;

    fn setup(program: &str, tests: &str) -> (Program, Vec<TestCase>) {
        let p = parse(program).unwrap();
        let t = parse_tests(tests, "tests.mini", &p).unwrap();
        (p, t)
    }

    #[test]
    fn unreached_site_is_reported() {
        let (p, t) = setup(
            "fn f(x) { if (x > 0) { y = 1; } return 0; }",
            "fn test_f() { assert f(0) == 0; }",
        );
        let site = AngelicSite::Guard(StatementId(1));
        assert_eq!(
            run_angelic(
                &p,
                &t[0],
                site,
                &ForcingPolicy::Uniform,
                DEFAULT_STEP_BUDGET
            ),
            Err(AngelicError::LocationNotExecuted(site))
        );
        let site = AngelicSite::Condition(StatementId(2));
        assert_eq!(
            run_angelic(
                &p,
                &t[0],
                site,
                &ForcingPolicy::Uniform,
                DEFAULT_STEP_BUDGET
            ),
            Err(AngelicError::InvalidLocation(site))
        );
    }

    #[test]
    fn per_occurrence_enumerates_all_triples() {
        let (p, t) = setup(
            "fn count(n) { c = 0; i = 0; while (i < n) { if (i > 5) { c = c + 1; } i = i + 1; } return c; }",
            "fn test_c() { assert count(3) == 0; }",
        );
        let traces = run_angelic(
            &p,
            &t[0],
            AngelicSite::Condition(StatementId(3)),
            &ForcingPolicy::PerOccurrence(3),
            DEFAULT_STEP_BUDGET,
        )
        .unwrap();
        assert_eq!(traces.len(), 8);
        let mut seqs: Vec<_> = traces.iter().map(|t| t.forced_values.clone()).collect();
        assert_eq!(seqs[0], vec![true, true, true]);
        seqs.sort();
        seqs.dedup();
        assert_eq!(seqs.len(), 8);
        let passing: Vec<_> = traces.iter().filter(|t| t.verdict.is_pass()).collect();
        assert_eq!(passing.len(), 1);
        assert_eq!(passing[0].forced_values, vec![false, false, false]);
        for trace in &traces {
            assert_eq!(trace.snapshots.len(), trace.forced_values.len());
        }
    }

    #[test]
    fn forcing_a_guard_skips_the_statement() {
        let (p, t) = setup(
            "fn f(x) { y = 1; y = x; return y; }",
            "fn test_f() { assert f(7) == 1; }",
        );
        let traces = run_angelic(
            &p,
            &t[0],
            AngelicSite::Guard(StatementId(1)),
            &ForcingPolicy::Uniform,
            DEFAULT_STEP_BUDGET,
        )
        .unwrap();
        assert_eq!(traces.len(), 2);
        assert!(!traces[0].verdict.is_pass());
        assert!(traces[1].verdict.is_pass());
        assert_eq!(traces[1].snapshots[0].to_string(), "{x=7, y=1}");

        let replay = run_angelic(
            &p,
            &t[0],
            AngelicSite::Guard(StatementId(1)),
            &ForcingPolicy::Replay(traces[1].forced_values.clone()),
            DEFAULT_STEP_BUDGET,
        )
        .unwrap();
        assert_eq!(replay[0].verdict, Verdict::Pass);
    }

    #[test]
    fn observation_reports_original_values() {
        let (p, t) = setup(
            "fn f(a) { if (len(a) > 1) { return 1; } return 0; }",
            "fn test_f() { assert f([1, 2]) == 1; }",
        );
        let seen = observe(
            &p,
            &t[0],
            AngelicSite::Condition(StatementId(0)),
            DEFAULT_STEP_BUDGET,
        )
        .unwrap();
        assert_eq!(seen.forced_values, vec![true]);
        assert_eq!(seen.snapshots[0].to_string(), "{len(a)=2}");
    }
}
