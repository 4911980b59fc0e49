//! Running programs against their tests.
//!
//! Every execution is deterministic for a given program, test, step budget
//! and nondeterminism tape, and records which program statements began
//! executing.

mod angelic;
mod interp;
mod value;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{
    check_program, parse_named, Block, Expr, LangError, Program, StatementId, StmtKind,
};

pub use angelic::{observe, run_angelic, AngelicError, AngelicSite, AngelicTrace, ForcingPolicy};
pub use value::{Scalar, Snapshot, SnapshotKey, Value};

use interp::Machine;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// A test: a zero-argument `test_*` function from a test module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub name: String,
    pub body: Block,
    pub declared_failing: bool,
}

impl TestCase {
    /// Integer literals used in the body.
    pub fn int_literals(&self) -> Vec<i64> {
        let mut out = Vec::new();
        self.body.walk(&mut |s| {
            for e in s.exprs() {
                e.visit(&mut |node| {
                    if let Expr::Int(v) = node {
                        out.push(*v);
                    }
                });
            }
        });
        out
    }
}

/// Where execution stopped: a statement of the program under test, or of
/// the test body itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Program(StatementId),
    Test(StatementId),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Program(id) => write!(f, "{id}"),
            Location::Test(id) => write!(f, "test:{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuntimeErrorKind {
    DivisionByZero,
    Overflow,
    IndexOutOfBounds { index: i64, len: usize },
    UndefinedVariable(String),
    TypeMismatch(String),
    NegativeArraySize,
    ArrayTooLarge,
    CallDepthExceeded,
    UnknownFunction(String),
    ArityMismatch(String),
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeErrorKind::DivisionByZero => f.write_str("division by zero"),
            RuntimeErrorKind::Overflow => f.write_str("integer overflow"),
            RuntimeErrorKind::IndexOutOfBounds { index, len } => {
                write!(f, "index {index} out of bounds for length {len}")
            }
            RuntimeErrorKind::UndefinedVariable(name) => write!(f, "undefined variable `{name}`"),
            RuntimeErrorKind::TypeMismatch(msg) => write!(f, "type mismatch: {msg}"),
            RuntimeErrorKind::NegativeArraySize => f.write_str("negative array size"),
            RuntimeErrorKind::ArrayTooLarge => f.write_str("array too large"),
            RuntimeErrorKind::CallDepthExceeded => f.write_str("call depth exceeded"),
            RuntimeErrorKind::UnknownFunction(name) => write!(f, "unknown function `{name}`"),
            RuntimeErrorKind::ArityMismatch(name) => {
                write!(f, "wrong number of arguments to `{name}`")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    AssertionFailure(Location),
    RuntimeError(RuntimeErrorKind, Location),
    StepBudgetExceeded,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::AssertionFailure(loc) => write!(f, "assertion failed at {loc}"),
            Verdict::RuntimeError(kind, loc) => write!(f, "{kind} at {loc}"),
            Verdict::StepBudgetExceeded => f.write_str("step budget exceeded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub verdict: Verdict,
    pub covered: BTreeSet<StatementId>,
    pub steps: u64,
}

impl TestResult {
    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

/// Values returned by successive `nondet()` calls. Entries past the explicit
/// list continue counting up from `offset`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NondetTape {
    pub values: Vec<i64>,
    pub offset: i64,
}

impl NondetTape {
    pub fn new(values: Vec<i64>) -> Self {
        NondetTape { values, offset: 0 }
    }

    /// The tape used for the `r`-th repetition of a run: the `k`-th call
    /// yields `r + k`.
    pub fn for_repetition(r: u32) -> Self {
        NondetTape {
            values: Vec::new(),
            offset: i64::from(r),
        }
    }

    pub fn value(&self, k: usize) -> i64 {
        self.values
            .get(k)
            .copied()
            .unwrap_or_else(|| self.offset.wrapping_add(k as i64))
    }
}

/// Parses a test module. Every top-level function must be a parameterless
/// `test_*` function containing at least one `assert`, and may only call
/// functions of `program` and intrinsics.
pub fn parse_tests(
    source: &str,
    source_name: &str,
    program: &Program,
) -> Result<Vec<TestCase>, LangError> {
    let module = parse_named(source, source_name)?;
    check_program(&module, Some(program))?;
    let invalid = |msg: String| Err(LangError::Invalid(msg));
    let mut tests = Vec::new();
    for func in &module.functions {
        if !func.name.starts_with("test_") {
            return invalid(format!(
                "`{}` in {source_name} is not a test function",
                func.name
            ));
        }
        if !func.params.is_empty() {
            return invalid(format!("test `{}` takes parameters", func.name));
        }
        let mut has_assert = false;
        let mut calls_test = None;
        func.body.walk(&mut |s| {
            has_assert |= matches!(s.kind, StmtKind::Assert(_));
            for e in s.exprs() {
                e.visit(&mut |node| {
                    if let Expr::Call(callee, _) = node {
                        if module.function(callee).is_some() {
                            calls_test.get_or_insert_with(|| callee.clone());
                        }
                    }
                });
            }
        });
        if !has_assert {
            return invalid(format!("test `{}` has no assert", func.name));
        }
        if let Some(callee) = calls_test {
            return invalid(format!("test `{}` calls test `{callee}`", func.name));
        }
        tests.push(TestCase {
            name: func.name.clone(),
            body: func.body.clone(),
            declared_failing: false,
        });
    }
    Ok(tests)
}

/// Runs one test with the default nondeterminism tape.
pub fn run_test(program: &Program, test: &TestCase, budget: u64) -> TestResult {
    run_test_with_tape(program, test, budget, &NondetTape::for_repetition(0))
}

pub fn run_test_with_tape(
    program: &Program,
    test: &TestCase,
    budget: u64,
    tape: &NondetTape,
) -> TestResult {
    let mut machine = Machine::new(program, budget, tape);
    let out = machine.run_test_body(&test.body);
    TestResult {
        test: test.name.clone(),
        verdict: out.verdict,
        covered: out.covered.into_iter().collect(),
        steps: out.steps,
    }
}

/// Runs every test in a fresh environment; results are in suite order.
pub fn run_suite(program: &Program, suite: &[TestCase], budget: u64) -> Vec<TestResult> {
    suite.iter().map(|t| run_test(program, t, budget)).collect()
}

/// Whether every test passes. Declared-failing tests run first and the
/// check stops at the first failure.
pub fn suite_passes(program: &Program, suite: &[TestCase], budget: u64) -> bool {
    let failing = suite.iter().filter(|t| t.declared_failing);
    let passing = suite.iter().filter(|t| !t.declared_failing);
    failing
        .chain(passing)
        .all(|t| run_test(program, t, budget).passed())
}

/// Names of tests whose verdict is not the same across `repetitions` runs,
/// each run using a different nondeterminism tape.
pub fn detect_flaky(
    program: &Program,
    suite: &[TestCase],
    budget: u64,
    repetitions: u32,
) -> BTreeSet<String> {
    let mut flaky = BTreeSet::new();
    for test in suite {
        let first =
            run_test_with_tape(program, test, budget, &NondetTape::for_repetition(0)).verdict;
        for r in 1..repetitions {
            let verdict =
                run_test_with_tape(program, test, budget, &NondetTape::for_repetition(r)).verdict;
            if verdict != first {
                flaky.insert(test.name.clone());
                break;
            }
        }
    }
    flaky
}
