//! Enumerative synthesis of boolean conditions from input/output rows.
//!
//! Candidates are generated bottom-up by node count. Within one size the
//! order is fixed: boolean variables, `true`, `false` (size 1); comparisons
//! `<`, `<=`, `==`, `!=` over integer atoms (size 3); then negation,
//! conjunction and disjunction. Integer atoms are the integer variables in
//! vocabulary order followed by the constants in pool order. Candidates that
//! agree on every row with an earlier one are dropped, so the first match
//! is size-minimal.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{Scalar, Snapshot, SnapshotKey};
use crate::lang::{BinaryOp, Expr, UnaryOp};

/// Hard cap on candidates built in one call.
const MAX_CANDIDATES: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisInstance {
    pub rows: Vec<(Snapshot, bool)>,
    pub vocabulary: Vec<SnapshotKey>,
    pub constants: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisFailure {
    #[error("two rows with the same inputs expect different outputs")]
    Contradiction,
    #[error("no condition within the size bound")]
    NoSolution,
    #[error("the instance has no rows")]
    Empty,
}

/// Condition language of the synthesizer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cond {
    BoolVar(SnapshotKey),
    Const(bool),
    Cmp(BinaryOp, Atom, Atom),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Var(SnapshotKey),
    Const(i64),
}

pub const COMPARISONS: [BinaryOp; 4] = [BinaryOp::Lt, BinaryOp::Le, BinaryOp::Eq, BinaryOp::Ne];

impl Atom {
    fn to_expr(&self) -> Expr {
        match self {
            Atom::Var(key) => key_expr(key),
            Atom::Const(v) => Expr::Int(*v),
        }
    }

    fn eval(&self, snapshot: &Snapshot) -> Option<i64> {
        match self {
            Atom::Var(key) => match snapshot.get(key)? {
                Scalar::Int(v) => Some(v),
                Scalar::Bool(_) => None,
            },
            Atom::Const(v) => Some(*v),
        }
    }
}

fn key_expr(key: &SnapshotKey) -> Expr {
    match key {
        SnapshotKey::Var(name) => Expr::var(name.clone()),
        SnapshotKey::Len(name) => Expr::Call("len".into(), vec![Expr::var(name.clone())]),
    }
}

impl Cond {
    pub fn size(&self) -> usize {
        match self {
            Cond::BoolVar(_) | Cond::Const(_) => 1,
            Cond::Cmp(..) => 3,
            Cond::Not(c) => 1 + c.size(),
            Cond::And(a, b) | Cond::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Value on one snapshot; `None` if a variable is unbound or mistyped.
    pub fn eval(&self, snapshot: &Snapshot) -> Option<bool> {
        Some(match self {
            Cond::BoolVar(key) => match snapshot.get(key)? {
                Scalar::Bool(b) => b,
                Scalar::Int(_) => return None,
            },
            Cond::Const(b) => *b,
            Cond::Cmp(op, l, r) => {
                let (l, r) = (l.eval(snapshot)?, r.eval(snapshot)?);
                match op {
                    BinaryOp::Lt => l < r,
                    BinaryOp::Le => l <= r,
                    BinaryOp::Eq => l == r,
                    BinaryOp::Ne => l != r,
                    _ => return None,
                }
            }
            Cond::Not(c) => !c.eval(snapshot)?,
            Cond::And(a, b) => a.eval(snapshot)? && b.eval(snapshot)?,
            Cond::Or(a, b) => a.eval(snapshot)? || b.eval(snapshot)?,
        })
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Cond::BoolVar(key) => key_expr(key),
            Cond::Const(b) => Expr::Bool(*b),
            Cond::Cmp(op, l, r) => Expr::binary(*op, l.to_expr(), r.to_expr()),
            Cond::Not(c) => Expr::unary(UnaryOp::Not, c.to_expr()),
            Cond::And(a, b) => Expr::binary(BinaryOp::And, a.to_expr(), b.to_expr()),
            Cond::Or(a, b) => Expr::binary(BinaryOp::Or, a.to_expr(), b.to_expr()),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::lang::print_expr(&self.to_expr()))
    }
}

/// Truth values over all rows, packed into words.
type Signature = Vec<u64>;

struct Enumerator<'a> {
    rows: &'a [(Snapshot, bool)],
    seen: HashSet<Signature>,
    /// Representatives grouped by size; index 0 unused.
    by_size: Vec<Vec<(Cond, Signature)>>,
    target: Signature,
    built: usize,
}

impl Enumerator<'_> {
    fn signature(&self, cond: &Cond) -> Option<Signature> {
        let mut sig = vec![0u64; self.rows.len().div_ceil(64)];
        for (i, (snapshot, _)) in self.rows.iter().enumerate() {
            if cond.eval(snapshot)? {
                sig[i / 64] |= 1 << (i % 64);
            }
        }
        Some(sig)
    }

    /// Records a candidate; returns it if it solves the instance.
    fn offer(&mut self, cond: Cond, size: usize) -> Option<Cond> {
        self.built += 1;
        let sig = self.signature(&cond)?;
        if !self.seen.insert(sig.clone()) {
            return None;
        }
        let found = (sig == self.target).then(|| cond.clone());
        self.by_size[size].push((cond, sig));
        found
    }
}

/// Smallest condition over the instance's vocabulary and constants that
/// agrees with every row.
pub fn synthesize_condition(
    inst: &SynthesisInstance,
    max_expr_size: usize,
) -> Result<Cond, SynthesisFailure> {
    if inst.rows.is_empty() {
        return Err(SynthesisFailure::Empty);
    }
    for (i, (a, ea)) in inst.rows.iter().enumerate() {
        if inst.rows[..i].iter().any(|(b, eb)| a == b && ea != eb) {
            return Err(SynthesisFailure::Contradiction);
        }
    }

    let first = &inst.rows[0].0;
    let mut bool_vars = Vec::new();
    let mut int_atoms = Vec::new();
    for key in &inst.vocabulary {
        match first.get(key) {
            Some(Scalar::Bool(_)) => bool_vars.push(key.clone()),
            Some(Scalar::Int(_)) => int_atoms.push(Atom::Var(key.clone())),
            None => {}
        }
    }
    int_atoms.extend(inst.constants.iter().map(|c| Atom::Const(*c)));

    let mut target = vec![0u64; inst.rows.len().div_ceil(64)];
    for (i, (_, expected)) in inst.rows.iter().enumerate() {
        if *expected {
            target[i / 64] |= 1 << (i % 64);
        }
    }
    let mut e = Enumerator {
        rows: &inst.rows,
        seen: HashSet::new(),
        by_size: vec![Vec::new(); max_expr_size + 1],
        target,
        built: 0,
    };

    for size in 1..=max_expr_size {
        let mut level = Vec::new();
        if size == 1 {
            level.extend(bool_vars.iter().cloned().map(Cond::BoolVar));
            level.push(Cond::Const(true));
            level.push(Cond::Const(false));
        }
        if size == 3 {
            for op in COMPARISONS {
                for l in &int_atoms {
                    for r in &int_atoms {
                        if l == r || matches!((l, r), (Atom::Const(_), Atom::Const(_))) {
                            continue;
                        }
                        level.push(Cond::Cmp(op, l.clone(), r.clone()));
                    }
                }
            }
        }
        for cond in level {
            if let Some(found) = e.offer(cond, size) {
                return Ok(found);
            }
        }

        if size >= 2 {
            let operands: Vec<Cond> = e.by_size[size - 1].iter().map(|(c, _)| c.clone()).collect();
            for c in operands {
                if let Some(found) = e.offer(Cond::Not(Box::new(c)), size) {
                    return Ok(found);
                }
            }
        }
        for make in [
            (|a, b| Cond::And(Box::new(a), Box::new(b))) as fn(Cond, Cond) -> Cond,
            |a, b| Cond::Or(Box::new(a), Box::new(b)),
        ] {
            for left_size in 1..size.saturating_sub(1) {
                let right_size = size - 1 - left_size;
                let lefts: Vec<Cond> = e.by_size[left_size]
                    .iter()
                    .map(|(c, _)| c.clone())
                    .collect();
                let rights: Vec<Cond> = e.by_size[right_size]
                    .iter()
                    .map(|(c, _)| c.clone())
                    .collect();
                for l in &lefts {
                    for r in &rights {
                        if e.built >= MAX_CANDIDATES {
                            return Err(SynthesisFailure::NoSolution);
                        }
                        if let Some(found) = e.offer(make(l.clone(), r.clone()), size) {
                            return Ok(found);
                        }
                    }
                }
            }
        }
    }
    Err(SynthesisFailure::NoSolution)
}
