//! Abstract syntax of MiniLang.
//!
//! Equality on statements, blocks, functions and programs is *structural*:
//! statement ids and source positions are bookkeeping and do not take part
//! in comparisons or hashing. Use [`Program::same_ids`] when id assignment
//! itself matters.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Identifier of a statement node, unique within one [`Program`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementId(pub u32);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }

    pub fn is_arithmetic(self) -> bool {
        !self.is_comparison() && !self.is_logical()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Array(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        Expr::Unary(op, Box::new(operand))
    }

    /// Number of nodes in the expression tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => 1,
            Expr::Array(items) => 1 + items.iter().map(Expr::size).sum::<usize>(),
            Expr::Index(base, index) => 1 + base.size() + index.size(),
            Expr::Unary(_, e) => 1 + e.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
            Expr::Call(_, args) => 1 + args.iter().map(Expr::size).sum::<usize>(),
        }
    }

    /// True for literal values that introduce no new computation: integer
    /// and boolean literals and the empty array.
    pub fn is_literal(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Bool(_) => true,
            Expr::Array(items) => items.is_empty(),
            _ => false,
        }
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
            Expr::Array(items) | Expr::Call(_, items) => items.iter().for_each(|e| e.visit(f)),
            Expr::Index(a, b) | Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Unary(_, e) => e.visit(f),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Statement {
    pub id: StatementId,
    pub kind: StmtKind,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Statement {}

impl Hash for Statement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StmtKind {
    Assign {
        target: String,
        value: Expr,
    },
    ArrayStore {
        target: String,
        index: Expr,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Block,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Return(Expr),
    Assert(Expr),
    Expr(Expr),
    Skip,
}

impl Statement {
    pub fn new(id: StatementId, kind: StmtKind) -> Self {
        Statement { id, kind }
    }

    /// Child blocks, in source order.
    pub fn blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => vec![then_block, else_block],
            StmtKind::While { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Block> {
        match &mut self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => vec![then_block, else_block],
            StmtKind::While { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Pre-order traversal of this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Statement)) {
        f(self);
        for block in self.blocks() {
            block.walk(f);
        }
    }

    /// Expressions owned directly by this statement (not by nested ones).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::ArrayStore { index, value, .. } => vec![index, value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Return(e) | StmtKind::Assert(e) | StmtKind::Expr(e) => vec![e],
            StmtKind::Skip => Vec::new(),
        }
    }

    pub fn contains_return(&self) -> bool {
        let mut found = false;
        self.walk(&mut |s| found |= matches!(s.kind, StmtKind::Return(_)));
        found
    }

    pub fn is_conditional(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Block {
    pub stmts: Vec<Statement>,
}

impl Block {
    pub fn new(stmts: Vec<Statement>) -> Self {
        Block { stmts }
    }

    pub fn is_empty(&self) -> bool {
        self.stmts.is_empty()
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Statement)) {
        for stmt in &self.stmts {
            stmt.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
}

/// Where a statement came from in the original source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePos {
    pub file: String,
    pub line: u32,
}

/// A MiniLang compilation unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Program {
    pub source_name: String,
    pub functions: Vec<FunctionDef>,
    /// Next id handed out to a statement created by patch application.
    pub(crate) next_id: u32,
    #[serde(default)]
    pub(crate) positions: BTreeMap<StatementId, SourcePos>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.functions == other.functions
    }
}

impl Eq for Program {}

impl Program {
    pub fn empty(source_name: impl Into<String>) -> Self {
        Program {
            source_name: source_name.into(),
            functions: Vec::new(),
            next_id: 0,
            positions: BTreeMap::new(),
        }
    }

    /// Builds a program from function definitions, renumbering every
    /// statement in pre-order starting at 0.
    pub fn from_functions(source_name: impl Into<String>, functions: Vec<FunctionDef>) -> Self {
        let mut program = Program {
            source_name: source_name.into(),
            functions,
            next_id: 0,
            positions: BTreeMap::new(),
        };
        program.renumber();
        program
    }

    /// Concatenates several units into one; statement ids are reassigned in
    /// pre-order over the result while source positions are carried over.
    pub fn link(source_name: impl Into<String>, units: Vec<Program>) -> Self {
        let mut functions = Vec::new();
        let mut positions = Vec::new();
        for unit in units {
            for func in &unit.functions {
                func.body
                    .walk(&mut |s| positions.push(unit.positions.get(&s.id).cloned()));
            }
            functions.extend(unit.functions);
        }
        let mut program = Program::from_functions(source_name, functions);
        for (idx, pos) in positions.into_iter().enumerate() {
            if let Some(pos) = pos {
                program.positions.insert(StatementId(idx as u32), pos);
            }
        }
        program
    }

    fn renumber(&mut self) {
        let mut next = 0u32;
        fn visit(block: &mut Block, next: &mut u32) {
            for stmt in &mut block.stmts {
                stmt.id = StatementId(*next);
                *next += 1;
                for child in stmt.blocks_mut() {
                    visit(child, next);
                }
            }
        }
        for func in &mut self.functions {
            visit(&mut func.body, &mut next);
        }
        self.next_id = next;
        self.positions.clear();
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Pre-order traversal over all statements of all functions.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a FunctionDef, &'a Statement)) {
        for func in &self.functions {
            func.body.walk(&mut |s| f(func, s));
        }
    }

    pub fn statements(&self) -> Vec<&Statement> {
        let mut out = Vec::new();
        self.walk(&mut |_, s| out.push(s));
        out
    }

    pub fn statement_count(&self) -> usize {
        self.statements().len()
    }

    pub fn statement(&self, id: StatementId) -> Option<&Statement> {
        self.enclosing(id).map(|(_, s)| s)
    }

    /// The statement with `id` together with the function containing it.
    pub fn enclosing(&self, id: StatementId) -> Option<(&FunctionDef, &Statement)> {
        let mut found = None;
        self.walk(&mut |func, s| {
            if s.id == id && found.is_none() {
                found = Some((func, s));
            }
        });
        found
    }

    pub fn position(&self, id: StatementId) -> Option<&SourcePos> {
        self.positions.get(&id)
    }

    pub(crate) fn set_position(&mut self, id: StatementId, pos: SourcePos) {
        self.positions.insert(id, pos);
    }

    /// Upper bound (exclusive) of ids in use.
    pub fn id_bound(&self) -> u32 {
        self.next_id
    }

    pub(crate) fn fresh_id(&mut self) -> StatementId {
        let id = StatementId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Structural equality that additionally requires identical id
    /// assignment.
    pub fn same_ids(&self, other: &Program) -> bool {
        let ids = |p: &Program| p.statements().iter().map(|s| s.id).collect::<Vec<_>>();
        self == other && ids(self) == ids(other)
    }

    /// Integer literals appearing anywhere in the program, in traversal
    /// order, without duplicates.
    pub fn int_literals(&self) -> Vec<i64> {
        let mut out = Vec::new();
        self.walk(&mut |_, s| {
            for e in s.exprs() {
                e.visit(&mut |node| {
                    if let Expr::Int(v) = node {
                        if !out.contains(v) {
                            out.push(*v);
                        }
                    }
                });
            }
        });
        out
    }

    /// Whether any expression calls the named function.
    pub fn calls(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |_, s| {
            for e in s.exprs() {
                e.visit(&mut |node| {
                    if matches!(node, Expr::Call(callee, _) if callee == name) {
                        found = true;
                    }
                });
            }
        });
        found
    }
}
