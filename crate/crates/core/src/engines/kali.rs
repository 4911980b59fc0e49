use crate::lang::{return_kind, Edit, Expr, Statement, StatementId, StmtKind};

use super::{is_if, Search, SearchEnd};

/// Candidate edits for one statement, in the order they are tried.
fn candidates(search: &Search, id: StatementId) -> Vec<Edit> {
    let program = search.program();
    let flags = &search.config.kali;
    let Some((func, stmt)) = program.enclosing(id) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    if !matches!(stmt.kind, StmtKind::Skip) {
        out.push(Edit::Delete(id));
    }
    if is_if(program, id) {
        if flags.enable_force_true {
            out.push(Edit::ReplaceCondition(id, Expr::Bool(true)));
        }
        if flags.enable_force_false {
            out.push(Edit::ReplaceCondition(id, Expr::Bool(false)));
        }
    }
    if flags.enable_early_return {
        let value = return_kind(program, &func.name).default_value();
        out.push(Edit::InsertBefore(
            id,
            Statement::new(id, StmtKind::Return(value)),
        ));
    }
    out
}

/// Tries deletion, condition forcing and early return on every suspicious
/// statement, most suspicious first.
pub(super) fn search(search: &mut Search) -> SearchEnd {
    for id in search.suspicious() {
        for edit in candidates(search, id) {
            if search.expired() {
                return SearchEnd::OutOfTime;
            }
            let patch = search.patch(vec![edit]);
            if search.passes(&patch) {
                return SearchEnd::Found(patch);
            }
        }
    }
    SearchEnd::Exhausted
}
