use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::printer::{print_expr, print_statement};
use super::{check_program, LangError};

/// The repair engines a patch can originate from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    GenProg,
    Kali,
    Nopol,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::GenProg, EngineKind::Kali, EngineKind::Nopol];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::GenProg => "genprog",
            EngineKind::Kali => "kali",
            EngineKind::Nopol => "nopol",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "genprog" | "jgenprog" => Ok(EngineKind::GenProg),
            "kali" | "jkali" => Ok(EngineKind::Kali),
            "nopol" => Ok(EngineKind::Nopol),
            other => Err(format!("unknown engine `{other}`")),
        }
    }
}

/// One AST edit. Statement ids refer to the program the patch is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edit {
    Delete(StatementId),
    Replace(StatementId, Statement),
    InsertBefore(StatementId, Statement),
    ReplaceCondition(StatementId, Expr),
    GuardWith(StatementId, Expr),
}

impl Edit {
    pub fn target(&self) -> StatementId {
        match self {
            Edit::Delete(id)
            | Edit::Replace(id, _)
            | Edit::InsertBefore(id, _)
            | Edit::ReplaceCondition(id, _)
            | Edit::GuardWith(id, _) => *id,
        }
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat = |s: &Statement| {
            print_statement(s)
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Edit::Delete(id) => write!(f, "delete {id}"),
            Edit::Replace(id, s) => write!(f, "replace {id} with `{}`", flat(s)),
            Edit::InsertBefore(id, s) => write!(f, "insert `{}` before {id}", flat(s)),
            Edit::ReplaceCondition(id, e) => {
                write!(f, "set condition of {id} to `{}`", print_expr(e))
            }
            Edit::GuardWith(id, e) => write!(f, "guard {id} with `{}`", print_expr(e)),
        }
    }
}

/// An ordered edit script plus where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub edits: Vec<Edit>,
    pub engine: EngineKind,
    pub seed: u64,
    pub search_wall_time_ms: u64,
}

impl Patch {
    pub fn new(engine: EngineKind, seed: u64, edits: Vec<Edit>) -> Self {
        Patch {
            edits,
            engine,
            seed,
            search_wall_time_ms: 0,
        }
    }

    /// Delete/skip-only shape: deletions, forcing a condition to a boolean
    /// literal, or inserting a `return` of a literal.
    pub fn is_delete_skip_only(&self) -> bool {
        self.edits.iter().all(|edit| match edit {
            Edit::Delete(_) => true,
            Edit::ReplaceCondition(_, Expr::Bool(_)) => true,
            Edit::InsertBefore(_, s) => matches!(&s.kind, StmtKind::Return(e) if e.is_literal()),
            _ => false,
        })
    }

    /// A single condition modification or guard insertion.
    pub fn is_single_condition_edit(&self) -> bool {
        matches!(
            self.edits.as_slice(),
            [Edit::ReplaceCondition(..)] | [Edit::GuardWith(..)]
        )
    }

    /// Whether the edit script has the shape its engine is allowed to
    /// produce. GenProg may use any edit.
    pub fn has_engine_shape(&self) -> bool {
        match self.engine {
            EngineKind::Kali => self.is_delete_skip_only(),
            EngineKind::Nopol => self.is_single_condition_edit(),
            EngineKind::GenProg => true,
        }
    }
}

fn locate(block: &mut Block, id: StatementId) -> Option<(&mut Block, usize)> {
    if let Some(idx) = block.stmts.iter().position(|s| s.id == id) {
        return Some((block, idx));
    }
    for stmt in &mut block.stmts {
        for child in stmt.blocks_mut() {
            if let Some(found) = locate(child, id) {
                return Some(found);
            }
        }
    }
    None
}

fn locate_in_program(
    program: &mut Program,
    id: StatementId,
) -> Result<(&mut Block, usize), LangError> {
    for func in &mut program.functions {
        if let Some(found) = locate(&mut func.body, id) {
            return Ok(found);
        }
    }
    Err(LangError::UnknownStatement(id))
}

/// Gives `stmt` and all statements nested in it fresh ids from `program`.
fn refresh_ids(stmt: &mut Statement, program: &mut Program) {
    stmt.id = program.fresh_id();
    for block in stmt.blocks_mut() {
        for child in &mut block.stmts {
            refresh_ids(child, program);
        }
    }
}

/// Applies the edits of `patch` in order to a copy of `program`.
///
/// Deleted statements become `skip;` and keep their id; statements created
/// by an edit (inserted, replacing, or a new guard) receive ids above every
/// id already in use.
pub fn apply_patch(program: &Program, patch: &Patch) -> Result<Program, LangError> {
    let mut out = program.clone();
    for edit in &patch.edits {
        apply_edit(&mut out, edit)?;
    }
    check_program(&out, None).map_err(|e| LangError::InvalidEdit(e.to_string()))?;
    Ok(out)
}

fn apply_edit(program: &mut Program, edit: &Edit) -> Result<(), LangError> {
    match edit {
        Edit::Delete(id) => {
            let (block, idx) = locate_in_program(program, *id)?;
            block.stmts[idx].kind = StmtKind::Skip;
        }
        Edit::Replace(id, replacement) => {
            locate_in_program(program, *id)?;
            let mut fresh = replacement.clone();
            refresh_ids(&mut fresh, program);
            let (block, idx) = locate_in_program(program, *id)?;
            block.stmts[idx] = fresh;
        }
        Edit::InsertBefore(id, inserted) => {
            locate_in_program(program, *id)?;
            let mut fresh = inserted.clone();
            refresh_ids(&mut fresh, program);
            let (block, idx) = locate_in_program(program, *id)?;
            block.stmts.insert(idx, fresh);
        }
        Edit::ReplaceCondition(id, new_cond) => {
            let (block, idx) = locate_in_program(program, *id)?;
            match &mut block.stmts[idx].kind {
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
                    *cond = new_cond.clone()
                }
                _ => {
                    return Err(LangError::InvalidEdit(format!(
                        "{id} is not a conditional statement"
                    )))
                }
            }
        }
        Edit::GuardWith(id, guard) => {
            locate_in_program(program, *id)?;
            let guard_id = program.fresh_id();
            let (block, idx) = locate_in_program(program, *id)?;
            let guarded = block.stmts[idx].clone();
            block.stmts[idx] = Statement::new(
                guard_id,
                StmtKind::If {
                    cond: guard.clone(),
                    then_block: Block::new(vec![guarded]),
                    else_block: Block::default(),
                },
            );
        }
    }
    Ok(())
}
