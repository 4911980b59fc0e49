//! Tree-walking evaluator with statement coverage and a step budget.

use std::collections::HashMap;

use crate::lang::{
    BinaryOp, Block, Expr, FunctionDef, Program, Statement, StatementId, StmtKind, UnaryOp,
};

use super::value::{Scalar, Snapshot, SnapshotKey, Value};
use super::{AngelicSite, Location, NondetTape, RuntimeErrorKind, Verdict};

const MAX_CALL_DEPTH: usize = 64;
const MAX_ARRAY_LEN: i64 = 1 << 20;

/// How a probed condition obtains its value.
#[derive(Debug, Clone)]
pub(crate) enum Tail {
    /// Evaluate as the program says (`true` for a guard point, which has no
    /// condition of its own).
    Original,
    Constant(bool),
}

/// Records, and optionally overrides, every dynamic evaluation at one site.
#[derive(Debug, Clone)]
pub(crate) struct Probe {
    pub site: AngelicSite,
    pub prefix: Vec<bool>,
    pub tail: Tail,
    pub records: Vec<(Snapshot, bool)>,
}

impl Probe {
    pub fn new(site: AngelicSite, prefix: Vec<bool>, tail: Tail) -> Self {
        Probe {
            site,
            prefix,
            tail,
            records: Vec::new(),
        }
    }
}

enum Halt {
    Assert(Location),
    Error(RuntimeErrorKind, Location),
    Budget,
}

type Exec<T> = Result<T, Halt>;

enum Flow {
    Normal,
    Return(Value),
}

struct Frame {
    vars: Vec<(String, Value)>,
    in_test: bool,
}

impl Frame {
    fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn get_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.vars
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    fn set(&mut self, name: &str, value: Value) {
        match self.get_mut(name) {
            Some(slot) => *slot = value,
            None => self.vars.push((name.to_string(), value)),
        }
    }

    fn snapshot(&self) -> Snapshot {
        let entries = self
            .vars
            .iter()
            .map(|(name, v)| match v {
                Value::Int(i) => (SnapshotKey::Var(name.clone()), Scalar::Int(*i)),
                Value::Bool(b) => (SnapshotKey::Var(name.clone()), Scalar::Bool(*b)),
                Value::Array(items) => (
                    SnapshotKey::Len(name.clone()),
                    Scalar::Int(items.len() as i64),
                ),
            })
            .collect();
        Snapshot { entries }
    }
}

/// Outcome of one execution.
pub(crate) struct RunOutcome {
    pub verdict: Verdict,
    pub covered: Vec<StatementId>,
    pub steps: u64,
}

pub(crate) struct Machine<'a> {
    functions: HashMap<&'a str, &'a FunctionDef>,
    budget: u64,
    steps: u64,
    covered: Vec<bool>,
    tape: &'a NondetTape,
    tape_pos: usize,
    frames: Vec<Frame>,
    pub probe: Option<Probe>,
}

impl<'a> Machine<'a> {
    pub fn new(program: &'a Program, budget: u64, tape: &'a NondetTape) -> Self {
        Machine {
            functions: program
                .functions
                .iter()
                .map(|f| (f.name.as_str(), f))
                .collect(),
            budget,
            steps: 0,
            covered: vec![false; program.id_bound() as usize],
            tape,
            tape_pos: 0,
            frames: Vec::new(),
            probe: None,
        }
    }

    /// Runs a test body. Statements of the body itself are not part of the
    /// program and are never covered or probed.
    pub fn run_test_body(&mut self, body: &Block) -> RunOutcome {
        self.frames.push(Frame {
            vars: Vec::new(),
            in_test: true,
        });
        let verdict = match self.exec_block(body) {
            Ok(_) => Verdict::Pass,
            Err(Halt::Assert(loc)) => Verdict::AssertionFailure(loc),
            Err(Halt::Error(kind, loc)) => Verdict::RuntimeError(kind, loc),
            Err(Halt::Budget) => Verdict::StepBudgetExceeded,
        };
        self.frames.clear();
        let covered = self
            .covered
            .iter()
            .enumerate()
            .filter(|(_, hit)| **hit)
            .map(|(i, _)| StatementId(i as u32))
            .collect();
        RunOutcome {
            verdict,
            covered,
            steps: self.steps,
        }
    }

    fn tick(&mut self) -> Exec<()> {
        if self.steps >= self.budget {
            return Err(Halt::Budget);
        }
        self.steps += 1;
        Ok(())
    }

    fn frame(&self) -> &Frame {
        self.frames.last().expect("frame")
    }

    fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("frame")
    }

    fn location(&self, id: StatementId) -> Location {
        if self.frame().in_test {
            Location::Test(id)
        } else {
            Location::Program(id)
        }
    }

    fn in_program(&self) -> bool {
        !self.frame().in_test
    }

    /// Value for a probed evaluation, consulting the probe's forcing plan.
    /// `original` computes the unforced value.
    fn probed(&mut self, original: impl FnOnce(&mut Self) -> Exec<bool>) -> Exec<bool> {
        let snapshot = self.frame().snapshot();
        let probe = self.probe.as_ref().expect("probe");
        let n = probe.records.len();
        let forced = if n < probe.prefix.len() {
            Some(probe.prefix[n])
        } else {
            match probe.tail {
                Tail::Constant(b) => Some(b),
                Tail::Original => None,
            }
        };
        let value = match forced {
            Some(b) => b,
            None => original(self)?,
        };
        self.probe
            .as_mut()
            .expect("probe")
            .records
            .push((snapshot, value));
        Ok(value)
    }

    fn probe_matches(&self, site: AngelicSite) -> bool {
        self.in_program() && self.probe.as_ref().is_some_and(|p| p.site == site)
    }

    fn exec_block(&mut self, block: &Block) -> Exec<Flow> {
        for stmt in &block.stmts {
            if let Flow::Return(v) = self.exec(stmt)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, stmt: &Statement) -> Exec<Flow> {
        if self.probe_matches(AngelicSite::Guard(stmt.id)) && !self.probed(|_| Ok(true))? {
            return Ok(Flow::Normal);
        }
        self.tick()?;
        if self.in_program() {
            if let Some(slot) = self.covered.get_mut(stmt.id.0 as usize) {
                *slot = true;
            }
        }
        let loc = self.location(stmt.id);

        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, loc)?;
                self.frame_mut().set(target, v);
            }
            StmtKind::ArrayStore {
                target,
                index,
                value,
            } => {
                let idx = self.eval_int(index, loc)?;
                let v = self.eval_int(value, loc)?;
                let slot = match self.frame_mut().get_mut(target) {
                    Some(Value::Array(items)) => {
                        let len = items.len();
                        usize::try_from(idx)
                            .ok()
                            .and_then(|i| items.get_mut(i))
                            .ok_or(Halt::Error(
                                RuntimeErrorKind::IndexOutOfBounds { index: idx, len },
                                loc,
                            ))?
                    }
                    Some(other) => {
                        let found = other.type_name();
                        return Err(Halt::Error(
                            RuntimeErrorKind::TypeMismatch(format!(
                                "`{target}` is {found}, not an array"
                            )),
                            loc,
                        ));
                    }
                    None => {
                        return Err(Halt::Error(
                            RuntimeErrorKind::UndefinedVariable(target.clone()),
                            loc,
                        ))
                    }
                };
                *slot = v;
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let taken = if self.probe_matches(AngelicSite::Condition(stmt.id)) {
                    self.probed(|m| m.eval_bool(cond, loc))?
                } else {
                    self.eval_bool(cond, loc)?
                };
                return self.exec_block(if taken { then_block } else { else_block });
            }
            StmtKind::While { cond, body } => loop {
                let go = if self.probe_matches(AngelicSite::Condition(stmt.id)) {
                    self.probed(|m| m.eval_bool(cond, loc))?
                } else {
                    self.eval_bool(cond, loc)?
                };
                if !go {
                    break;
                }
                if let Flow::Return(v) = self.exec_block(body)? {
                    return Ok(Flow::Return(v));
                }
            },
            StmtKind::Return(e) => {
                let v = self.eval(e, loc)?;
                return Ok(Flow::Return(v));
            }
            StmtKind::Assert(e) => {
                if !self.eval_bool(e, loc)? {
                    return Err(Halt::Assert(loc));
                }
            }
            StmtKind::Expr(e) => {
                self.eval(e, loc)?;
            }
            StmtKind::Skip => {}
        }
        Ok(Flow::Normal)
    }

    fn eval_int(&mut self, e: &Expr, loc: Location) -> Exec<i64> {
        match self.eval(e, loc)? {
            Value::Int(v) => Ok(v),
            other => Err(type_error("int", &other, loc)),
        }
    }

    fn eval_bool(&mut self, e: &Expr, loc: Location) -> Exec<bool> {
        match self.eval(e, loc)? {
            Value::Bool(b) => Ok(b),
            other => Err(type_error("bool", &other, loc)),
        }
    }

    fn lookup(&self, name: &str, loc: Location) -> Exec<&Value> {
        self.frame()
            .get(name)
            .ok_or_else(|| Halt::Error(RuntimeErrorKind::UndefinedVariable(name.to_string()), loc))
    }

    fn eval(&mut self, e: &Expr, loc: Location) -> Exec<Value> {
        self.tick()?;
        let err = |kind| Halt::Error(kind, loc);
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(name) => self.lookup(name, loc)?.clone(),
            Expr::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(self.eval_int(item, loc)?);
                }
                Value::Array(out)
            }
            Expr::Index(base, index) => {
                // index variables in place rather than copying the array
                let owned;
                let idx;
                let items: &[i64] = if let Expr::Var(name) = base.as_ref() {
                    self.tick()?;
                    idx = self.eval_int(index, loc)?;
                    match self.lookup(name, loc)? {
                        Value::Array(items) => items,
                        other => return Err(type_error("array", other, loc)),
                    }
                } else {
                    owned = match self.eval(base, loc)? {
                        Value::Array(items) => items,
                        other => return Err(type_error("array", &other, loc)),
                    };
                    idx = self.eval_int(index, loc)?;
                    &owned
                };
                let len = items.len();
                match usize::try_from(idx).ok().and_then(|i| items.get(i)) {
                    Some(v) => Value::Int(*v),
                    None => {
                        return Err(err(RuntimeErrorKind::IndexOutOfBounds { index: idx, len }))
                    }
                }
            }
            Expr::Unary(op, operand) => match (op, self.eval(operand, loc)?) {
                (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (UnaryOp::Neg, Value::Int(v)) => Value::Int(
                    v.checked_neg()
                        .ok_or_else(|| err(RuntimeErrorKind::Overflow))?,
                ),
                (UnaryOp::Not, other) => return Err(type_error("bool", &other, loc)),
                (UnaryOp::Neg, other) => return Err(type_error("int", &other, loc)),
            },
            Expr::Binary(BinaryOp::And, lhs, rhs) => {
                Value::Bool(self.eval_bool(lhs, loc)? && self.eval_bool(rhs, loc)?)
            }
            Expr::Binary(BinaryOp::Or, lhs, rhs) => {
                Value::Bool(self.eval_bool(lhs, loc)? || self.eval_bool(rhs, loc)?)
            }
            Expr::Binary(op @ (BinaryOp::Eq | BinaryOp::Ne), lhs, rhs) => {
                let l = self.eval(lhs, loc)?;
                let r = self.eval(rhs, loc)?;
                if std::mem::discriminant(&l) != std::mem::discriminant(&r) {
                    return Err(err(RuntimeErrorKind::TypeMismatch(format!(
                        "cannot compare {} with {}",
                        l.type_name(),
                        r.type_name()
                    ))));
                }
                Value::Bool((l == r) == (*op == BinaryOp::Eq))
            }
            Expr::Binary(op, lhs, rhs) => {
                let l = self.eval_int(lhs, loc)?;
                let r = self.eval_int(rhs, loc)?;
                let overflow = || err(RuntimeErrorKind::Overflow);
                match op {
                    BinaryOp::Add => Value::Int(l.checked_add(r).ok_or_else(overflow)?),
                    BinaryOp::Sub => Value::Int(l.checked_sub(r).ok_or_else(overflow)?),
                    BinaryOp::Mul => Value::Int(l.checked_mul(r).ok_or_else(overflow)?),
                    BinaryOp::Div | BinaryOp::Rem => {
                        if r == 0 {
                            return Err(err(RuntimeErrorKind::DivisionByZero));
                        }
                        let v = if *op == BinaryOp::Div {
                            l.checked_div(r)
                        } else {
                            l.checked_rem(r)
                        };
                        Value::Int(v.ok_or_else(overflow)?)
                    }
                    BinaryOp::Lt => Value::Bool(l < r),
                    BinaryOp::Le => Value::Bool(l <= r),
                    BinaryOp::Gt => Value::Bool(l > r),
                    BinaryOp::Ge => Value::Bool(l >= r),
                    BinaryOp::And | BinaryOp::Or | BinaryOp::Eq | BinaryOp::Ne => unreachable!(),
                }
            }
            Expr::Call(name, args) => self.call(name, args, loc)?,
        })
    }

    fn call(&mut self, name: &str, args: &[Expr], loc: Location) -> Exec<Value> {
        let err = |kind| Halt::Error(kind, loc);
        match (name, args) {
            ("len", [arg]) => {
                let len = if let Expr::Var(var) = arg {
                    self.tick()?;
                    match self.lookup(var, loc)? {
                        Value::Array(items) => items.len(),
                        other => return Err(type_error("array", other, loc)),
                    }
                } else {
                    match self.eval(arg, loc)? {
                        Value::Array(items) => items.len(),
                        other => return Err(type_error("array", &other, loc)),
                    }
                };
                return Ok(Value::Int(len as i64));
            }
            ("array", [arg]) => {
                let n = self.eval_int(arg, loc)?;
                if n < 0 {
                    return Err(err(RuntimeErrorKind::NegativeArraySize));
                }
                if n > MAX_ARRAY_LEN {
                    return Err(err(RuntimeErrorKind::ArrayTooLarge));
                }
                return Ok(Value::Array(vec![0; n as usize]));
            }
            ("nondet", []) => {
                let v = self.tape.value(self.tape_pos);
                self.tape_pos += 1;
                return Ok(Value::Int(v));
            }
            _ => {}
        }

        let func = *self
            .functions
            .get(name)
            .ok_or_else(|| err(RuntimeErrorKind::UnknownFunction(name.to_string())))?;
        if func.params.len() != args.len() {
            return Err(err(RuntimeErrorKind::ArityMismatch(name.to_string())));
        }
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(err(RuntimeErrorKind::CallDepthExceeded));
        }
        let mut vars = Vec::with_capacity(args.len());
        for (param, arg) in func.params.iter().zip(args) {
            vars.push((param.clone(), self.eval(arg, loc)?));
        }
        self.frames.push(Frame {
            vars,
            in_test: false,
        });
        let result = self.exec_block(&func.body);
        self.frames.pop();
        Ok(match result? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Int(0),
        })
    }
}

fn type_error(expected: &str, found: &Value, loc: Location) -> Halt {
    Halt::Error(
        RuntimeErrorKind::TypeMismatch(format!("expected {expected}, found {}", found.type_name())),
        loc,
    )
}
