use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "  ";

/// Canonical rendering: one statement per line, two-space indentation, a
/// blank line between functions and no trailing whitespace.
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    for (i, func) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "fn {}({}) {{", func.name, func.params.join(", "));
        print_block(&func.body, 1, &mut out);
        out.push_str("}\n");
    }
    out
}

/// Renders one statement (and its children) at indentation level zero,
/// without a trailing newline.
pub fn print_statement(stmt: &Statement) -> String {
    let mut out = String::new();
    write_statement(stmt, 0, &mut out);
    out.truncate(out.trim_end().len());
    out
}

fn print_block(block: &Block, depth: usize, out: &mut String) {
    for stmt in &block.stmts {
        write_statement(stmt, depth, out);
    }
}

fn write_statement(stmt: &Statement, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    match &stmt.kind {
        StmtKind::Assign { target, value } => {
            let _ = writeln!(out, "{pad}{target} = {};", print_expr(value));
        }
        StmtKind::ArrayStore {
            target,
            index,
            value,
        } => {
            let _ = writeln!(
                out,
                "{pad}{target}[{}] = {};",
                print_expr(index),
                print_expr(value)
            );
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = writeln!(out, "{pad}if ({}) {{", print_expr(cond));
            print_block(then_block, depth + 1, out);
            if !else_block.is_empty() {
                let _ = writeln!(out, "{pad}}} else {{");
                print_block(else_block, depth + 1, out);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}while ({}) {{", print_expr(cond));
            print_block(body, depth + 1, out);
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::Return(e) => {
            let _ = writeln!(out, "{pad}return {};", print_expr(e));
        }
        StmtKind::Assert(e) => {
            let _ = writeln!(out, "{pad}assert {};", print_expr(e));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{pad}{};", print_expr(e));
        }
        StmtKind::Skip => {
            let _ = writeln!(out, "{pad}skip;");
        }
    }
}

const PREC_UNARY: u8 = 7;
const PREC_POSTFIX: u8 = 8;

fn expr_precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => PREC_UNARY,
        // a negative literal starts with a sign and behaves like a prefix
        // expression when it is the base of an index
        Expr::Int(v) if *v < 0 => PREC_UNARY,
        _ => PREC_POSTFIX,
    }
}

/// Renders an expression with the minimum parentheses needed for the
/// parser to rebuild the same tree.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_child(child: &Expr, min_prec: u8, out: &mut String) {
    if expr_precedence(child) < min_prec {
        out.push('(');
        write_expr(child, out);
        out.push(')');
    } else {
        write_expr(child, out);
    }
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(item, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Array(items) => {
            out.push('[');
            write_list(items, out);
            out.push(']');
        }
        Expr::Index(base, index) => {
            write_child(base, PREC_POSTFIX, out);
            out.push('[');
            write_expr(index, out);
            out.push(']');
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            write_list(args, out);
            out.push(')');
        }
        Expr::Unary(op, operand) => {
            out.push(match op {
                UnaryOp::Not => '!',
                UnaryOp::Neg => '-',
            });
            let mut inner = String::new();
            write_child(operand, PREC_UNARY, &mut inner);
            // `-` followed by a digit would re-lex as a negative literal
            if *op == UnaryOp::Neg && inner.starts_with(|c: char| c.is_ascii_digit()) {
                let _ = write!(out, "({inner})");
            } else {
                out.push_str(&inner);
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            write_child(lhs, prec, out);
            let _ = write!(out, " {} ", op.symbol());
            write_child(rhs, prec + 1, out);
        }
    }
}
