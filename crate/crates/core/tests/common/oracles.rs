//! Independent reference implementations used to check the library.

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use repairforge::exec::{Scalar, Snapshot, SnapshotKey};
use repairforge::faultloc::MetricKind;
use repairforge::lang::{BinaryOp, Expr, UnaryOp};

type Q = Ratio<i64>;

fn q(n: u32) -> Q {
    Q::from_integer(i64::from(n))
}

fn div(num: Q, den: Q) -> Q {
    if den == Q::from_integer(0) {
        Q::from_integer(0)
    } else {
        num / den
    }
}

fn to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Suspiciousness computed in exact rational arithmetic. Ochiai takes one
/// square root of the exact squared score at the end.
pub fn exact_score(ef: u32, ep: u32, nf: u32, np: u32, metric: MetricKind) -> f64 {
    let (ef, ep, nf, np) = (q(ef), q(ep), q(nf), q(np));
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    match metric {
        MetricKind::Tarantula => {
            let f = div(ef, ef + nf);
            let p = div(ep, ep + np);
            to_f64(div(f, f + p))
        }
        MetricKind::Ochiai => {
            let den = (ef + ep) * (ef + nf);
            to_f64(div(ef * ef, den)).sqrt()
        }
        MetricKind::Jaccard => to_f64(div(ef, ef + ep + nf)),
        MetricKind::Ample => {
            let d = div(ef, ef + nf) - div(ep, ep + np);
            to_f64(if d < zero { -d } else { d })
        }
        MetricKind::Naish1 => {
            if ef > zero {
                -1.0
            } else {
                to_f64(np)
            }
        }
        MetricKind::Naish2 => to_f64(ef - div(ep, ep + np + one)),
        MetricKind::GP13 => to_f64(ef * (one + div(one, ep + ep + ef))),
    }
}

/// Expressions of the synthesis grammar, evaluated directly.
#[derive(Debug, Clone)]
pub enum BExpr {
    BoolVar(String),
    Lit(bool),
    Cmp(u8, IExpr, IExpr),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

#[derive(Debug, Clone)]
pub enum IExpr {
    Var(String),
    Const(i64),
}

impl IExpr {
    fn eval(&self, s: &Snapshot) -> i64 {
        match self {
            IExpr::Var(n) => match s.get(&SnapshotKey::Var(n.clone())) {
                Some(Scalar::Int(v)) => v,
                other => panic!("{n} is {other:?}"),
            },
            IExpr::Const(c) => *c,
        }
    }
}

impl BExpr {
    pub fn size(&self) -> usize {
        match self {
            BExpr::BoolVar(_) | BExpr::Lit(_) => 1,
            BExpr::Cmp(..) => 3,
            BExpr::Not(e) => 1 + e.size(),
            BExpr::And(a, b) | BExpr::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn eval(&self, s: &Snapshot) -> bool {
        match self {
            BExpr::BoolVar(n) => match s.get(&SnapshotKey::Var(n.clone())) {
                Some(Scalar::Bool(b)) => b,
                other => panic!("{n} is {other:?}"),
            },
            BExpr::Lit(b) => *b,
            BExpr::Cmp(op, l, r) => {
                let (l, r) = (l.eval(s), r.eval(s));
                match op {
                    0 => l < r,
                    1 => l <= r,
                    2 => l == r,
                    _ => l != r,
                }
            }
            BExpr::Not(e) => !e.eval(s),
            BExpr::And(a, b) => a.eval(s) && b.eval(s),
            BExpr::Or(a, b) => a.eval(s) || b.eval(s),
        }
    }
}

/// Every expression of exactly `size` nodes over the given variables and
/// constants, without any pruning.
pub fn all_of_size(
    size: usize,
    bools: &[String],
    ints: &[String],
    constants: &[i64],
) -> Vec<BExpr> {
    let atoms: Vec<IExpr> = ints
        .iter()
        .cloned()
        .map(IExpr::Var)
        .chain(constants.iter().copied().map(IExpr::Const))
        .collect();
    let mut by_size: Vec<Vec<BExpr>> = vec![Vec::new(); size + 1];
    for s in 1..=size {
        let mut level = Vec::new();
        if s == 1 {
            level.extend(bools.iter().cloned().map(BExpr::BoolVar));
            level.push(BExpr::Lit(true));
            level.push(BExpr::Lit(false));
        }
        if s == 3 {
            for op in 0..4 {
                for l in &atoms {
                    for r in &atoms {
                        level.push(BExpr::Cmp(op, l.clone(), r.clone()));
                    }
                }
            }
        }
        if s >= 2 {
            for e in &by_size[s - 1] {
                level.push(BExpr::Not(Box::new(e.clone())));
            }
        }
        for left in 1..s.saturating_sub(1) {
            let right = s - 1 - left;
            for a in &by_size[left] {
                for b in &by_size[right] {
                    level.push(BExpr::And(Box::new(a.clone()), Box::new(b.clone())));
                    level.push(BExpr::Or(Box::new(a.clone()), Box::new(b.clone())));
                }
            }
        }
        by_size[s] = level;
    }
    by_size.swap_remove(size)
}

/// Size of the smallest agreeing expression, if one of at most `max` nodes
/// exists.
pub fn min_size(
    rows: &[(Snapshot, bool)],
    bools: &[String],
    ints: &[String],
    constants: &[i64],
    max: usize,
) -> Option<usize> {
    (1..=max).find(|&s| {
        all_of_size(s, bools, ints, constants)
            .iter()
            .any(|e| rows.iter().all(|(snap, want)| e.eval(snap) == *want))
    })
}

/// A random instance with up to three variables whose rows are labelled by
/// a random expression of at most `max` nodes, or at random.
pub struct RandomInstance {
    pub rows: Vec<(Snapshot, bool)>,
    pub bools: Vec<String>,
    pub ints: Vec<String>,
    pub constants: Vec<i64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max: usize) -> RandomInstance {
    let nvars = rng.gen_range(1..=3);
    let mut bools = Vec::new();
    let mut ints = Vec::new();
    for i in 0..nvars {
        let name = ["p", "q", "r"][i].to_string();
        if rng.gen_bool(0.25) {
            bools.push(name);
        } else {
            ints.push(name);
        }
    }
    let mut constants: Vec<i64> = (0..rng.gen_range(0..=2))
        .map(|_| rng.gen_range(-2..=3))
        .collect();
    constants.sort_unstable();
    constants.dedup();

    let nrows = rng.gen_range(1..=6);
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for _ in 0..nrows {
        let mut entries: Vec<(SnapshotKey, Scalar)> = Vec::new();
        for n in &bools {
            entries.push((SnapshotKey::Var(n.clone()), Scalar::Bool(rng.gen_bool(0.5))));
        }
        for n in &ints {
            entries.push((
                SnapshotKey::Var(n.clone()),
                Scalar::Int(rng.gen_range(-3..=3)),
            ));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let snap = Snapshot { entries };
        if !snapshots.contains(&snap) {
            snapshots.push(snap);
        }
    }

    let labels: Vec<bool> = if rng.gen_bool(0.8) {
        let size = rng.gen_range(1..=max);
        let pool = all_of_size(size, &bools, &ints, &constants);
        if pool.is_empty() {
            snapshots.iter().map(|_| rng.gen_bool(0.5)).collect()
        } else {
            let e = &pool[rng.gen_range(0..pool.len())];
            snapshots.iter().map(|s| e.eval(s)).collect()
        }
    } else {
        snapshots.iter().map(|_| rng.gen_bool(0.5)).collect()
    };
    RandomInstance {
        rows: snapshots.into_iter().zip(labels).collect(),
        bools,
        ints,
        constants,
    }
}

/// Evaluates a MiniLang condition over a snapshot, reading `len(a)` from
/// the snapshot's length keys.
pub fn eval_condition(e: &Expr, s: &Snapshot) -> Scalar {
    let int = |e: &Expr| match eval_condition(e, s) {
        Scalar::Int(v) => v,
        other => panic!("{other:?}"),
    };
    let boolean = |e: &Expr| match eval_condition(e, s) {
        Scalar::Bool(v) => v,
        other => panic!("{other:?}"),
    };
    match e {
        Expr::Int(v) => Scalar::Int(*v),
        Expr::Bool(b) => Scalar::Bool(*b),
        Expr::Var(n) => s.get(&SnapshotKey::Var(n.clone())).expect("bound"),
        Expr::Call(f, args) if f == "len" => match &args[0] {
            Expr::Var(n) => s.get(&SnapshotKey::Len(n.clone())).expect("bound"),
            other => panic!("{other:?}"),
        },
        Expr::Unary(UnaryOp::Not, e) => Scalar::Bool(!boolean(e)),
        Expr::Binary(op, l, r) => match op {
            BinaryOp::And => Scalar::Bool(boolean(l) && boolean(r)),
            BinaryOp::Or => Scalar::Bool(boolean(l) || boolean(r)),
            BinaryOp::Lt => Scalar::Bool(int(l) < int(r)),
            BinaryOp::Le => Scalar::Bool(int(l) <= int(r)),
            BinaryOp::Gt => Scalar::Bool(int(l) > int(r)),
            BinaryOp::Ge => Scalar::Bool(int(l) >= int(r)),
            BinaryOp::Eq => Scalar::Bool(eval_condition(l, s) == eval_condition(r, s)),
            BinaryOp::Ne => Scalar::Bool(eval_condition(l, s) != eval_condition(r, s)),
            other => panic!("{other:?}"),
        },
        other => panic!("{other:?}"),
    }
}
