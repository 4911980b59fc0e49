use diffy::{DiffOptions, Patch as TextPatch};

use super::ast::Program;
use super::printer::print;
use super::LangError;

/// Unified diff between the canonical renderings of two programs. Empty
/// exactly when the renderings are identical.
pub fn diff(original: &Program, patched: &Program) -> String {
    let before = print(original);
    let after = print(patched);
    diff_text(&original.source_name, &before, &after)
}

pub fn diff_text(name: &str, before: &str, after: &str) -> String {
    if before == after {
        return String::new();
    }
    DiffOptions::new()
        .set_original_filename(format!("a/{name}"))
        .set_modified_filename(format!("b/{name}"))
        .create_patch(before, after)
        .to_string()
}

/// Applies a unified diff to `base`. Hunks must match exactly.
pub fn apply_diff(base: &str, diff_text: &str) -> Result<String, LangError> {
    let patch = TextPatch::from_str(diff_text)
        .map_err(|e| LangError::InvalidDiff(format!("malformed diff: {e}")))?;
    diffy::apply(base, &patch).map_err(|e| LangError::InvalidDiff(e.to_string()))
}
