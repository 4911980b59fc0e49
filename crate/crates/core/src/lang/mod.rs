//! MiniLang: the language programs are repaired in.
//!
//! A program is a list of functions over 64-bit integers, booleans and
//! fixed-size integer arrays. See `docs/minilang.md` for the grammar.

mod ast;
mod diff;
mod lexer;
mod parser;
mod patch;
mod printer;

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

pub use ast::*;
pub use diff::{apply_diff, diff, diff_text};
pub use lexer::is_keyword;
pub use parser::{parse, parse_expr, parse_named};
pub use patch::{apply_patch, Edit, EngineKind, Patch};
pub use printer::{print, print_expr, print_statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("unknown statement {0}")]
    UnknownStatement(StatementId),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("cannot apply diff: {0}")]
    InvalidDiff(String),
}

/// Intrinsic functions and their arities.
pub const BUILTINS: &[(&str, usize)] = &[("len", 1), ("array", 1), ("nondet", 0)];

pub fn builtin_arity(name: &str) -> Option<usize> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

/// Static validity checks: unique function and parameter names, no
/// function shadowing an intrinsic, unique statement ids, and every call
/// naming a known function with the right number of arguments. Calls may
/// also target functions of `linked` (the program under test, when
/// checking a test module).
pub fn check_program(program: &Program, linked: Option<&Program>) -> Result<(), LangError> {
    let invalid = |msg: String| Err(LangError::Invalid(msg));
    let mut names = HashSet::new();
    for func in &program.functions {
        if builtin_arity(&func.name).is_some() {
            return invalid(format!("function `{}` shadows an intrinsic", func.name));
        }
        if !names.insert(func.name.as_str()) {
            return invalid(format!("duplicate function `{}`", func.name));
        }
        let mut params = HashSet::new();
        for p in &func.params {
            if !params.insert(p.as_str()) {
                return invalid(format!("duplicate parameter `{p}` in `{}`", func.name));
            }
        }
    }
    if let Some(other) = linked {
        for func in &other.functions {
            if names.contains(func.name.as_str()) {
                return invalid(format!("`{}` is defined twice", func.name));
            }
        }
    }

    let arity = |name: &str| {
        builtin_arity(name)
            .or_else(|| program.function(name).map(|f| f.params.len()))
            .or_else(|| {
                linked
                    .and_then(|l| l.function(name))
                    .map(|f| f.params.len())
            })
    };

    let mut ids = BTreeSet::new();
    let mut problem = None;
    program.walk(&mut |func, stmt| {
        if problem.is_some() {
            return;
        }
        if !ids.insert(stmt.id) {
            problem = Some(format!("statement id {} used twice", stmt.id));
            return;
        }
        for e in stmt.exprs() {
            e.visit(&mut |node| {
                if let Expr::Call(callee, args) = node {
                    match arity(callee) {
                        None => {
                            problem.get_or_insert(format!(
                                "`{}` calls unknown function `{callee}`",
                                func.name
                            ));
                        }
                        Some(n) if n != args.len() => {
                            problem.get_or_insert(format!(
                                "`{callee}` expects {n} argument(s), got {}",
                                args.len()
                            ));
                        }
                        Some(_) => {}
                    }
                }
            });
        }
    });
    match problem {
        Some(msg) => invalid(msg),
        None => Ok(()),
    }
}

/// Coarse static type of a function's return values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    Int,
    Bool,
    Array,
}

impl ReturnKind {
    /// The literal returned by an early-exit inserted into such a function.
    pub fn default_value(self) -> Expr {
        match self {
            ReturnKind::Int => Expr::Int(0),
            ReturnKind::Bool => Expr::Bool(false),
            ReturnKind::Array => Expr::Array(Vec::new()),
        }
    }
}

fn expr_kind(
    program: &Program,
    func: &FunctionDef,
    e: &Expr,
    visiting: &mut Vec<String>,
    follow_vars: bool,
) -> Option<ReturnKind> {
    match e {
        Expr::Int(_) | Expr::Index(..) => Some(ReturnKind::Int),
        Expr::Bool(_) => Some(ReturnKind::Bool),
        Expr::Array(_) => Some(ReturnKind::Array),
        Expr::Var(name) if follow_vars => {
            let mut assigned = Vec::new();
            func.body.walk(&mut |s| {
                if let StmtKind::Assign { target, value } = &s.kind {
                    if target == name {
                        assigned.push(value);
                    }
                }
            });
            assigned
                .into_iter()
                .find_map(|v| expr_kind(program, func, v, visiting, false))
        }
        Expr::Var(_) => None,
        Expr::Unary(UnaryOp::Not, _) => Some(ReturnKind::Bool),
        Expr::Unary(UnaryOp::Neg, _) => Some(ReturnKind::Int),
        Expr::Binary(op, ..) if op.is_arithmetic() => Some(ReturnKind::Int),
        Expr::Binary(..) => Some(ReturnKind::Bool),
        Expr::Call(name, _) => match name.as_str() {
            "len" | "nondet" => Some(ReturnKind::Int),
            "array" => Some(ReturnKind::Array),
            _ => function_kind(program, name, visiting),
        },
    }
}

fn function_kind(program: &Program, name: &str, visiting: &mut Vec<String>) -> Option<ReturnKind> {
    if visiting.iter().any(|v| v == name) {
        return None;
    }
    let func = program.function(name)?;
    visiting.push(name.to_string());
    let mut returns = Vec::new();
    func.body.walk(&mut |s| {
        if let StmtKind::Return(e) = &s.kind {
            returns.push(e);
        }
    });
    let kind = returns
        .into_iter()
        .find_map(|e| expr_kind(program, func, e, visiting, true));
    visiting.pop();
    kind
}

/// Infers what a function returns from its `return` statements, looking
/// through calls. Falls back to `Int` when nothing is conclusive.
pub fn return_kind(program: &Program, function: &str) -> ReturnKind {
    function_kind(program, function, &mut Vec::new()).unwrap_or(ReturnKind::Int)
}
