use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

/// Nesting limit for blocks and expressions. Keeps recursion bounded on
/// adversarial input.
const MAX_DEPTH: usize = 128;

/// Parses a MiniLang compilation unit. Statement ids are assigned in
/// pre-order starting at 0.
pub fn parse(source: &str) -> Result<Program, LangError> {
    parse_named(source, "<input>")
}

/// Like [`parse`], recording `source_name` as the file of every statement.
pub fn parse_named(source: &str, source_name: &str) -> Result<Program, LangError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
        next_id: 0,
        positions: Vec::new(),
    };
    let mut functions = Vec::new();
    while parser.peek() != &Tok::Eof {
        functions.push(parser.function()?);
    }
    let mut program = Program::from_functions(source_name, functions);
    for (id, line) in parser.positions {
        program.set_position(
            id,
            SourcePos {
                file: source_name.to_string(),
                line,
            },
        );
    }
    Ok(program)
}

/// Parses a single expression, e.g. a guard condition taken from a
/// reference patch.
pub fn parse_expr(source: &str) -> Result<Expr, LangError> {
    let mut parser = Parser {
        tokens: tokenize(source)?,
        pos: 0,
        depth: 0,
        next_id: 0,
        positions: Vec::new(),
    };
    let expr = parser.expr(0)?;
    parser.expect(Tok::Eof)?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    next_id: u32,
    positions: Vec<(StatementId, u32)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> LangError {
        let t = &self.tokens[self.pos];
        LangError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), LangError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            other => Err(self.error(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn enter(&mut self) -> Result<(), LangError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.error("nesting too deep"))
        } else {
            Ok(())
        }
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn function(&mut self) -> Result<FunctionDef, LangError> {
        self.expect(Tok::Fn)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(FunctionDef { name, params, body })
    }

    fn block(&mut self) -> Result<Block, LangError> {
        self.enter()?;
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.error("unterminated block"));
            }
            stmts.push(self.statement()?);
        }
        self.advance();
        self.leave();
        Ok(Block::new(stmts))
    }

    fn statement(&mut self) -> Result<Statement, LangError> {
        let id = StatementId(self.next_id);
        self.next_id += 1;
        self.positions.push((id, self.tokens[self.pos].line));

        let kind = match self.peek() {
            Tok::Skip => {
                self.advance();
                self.expect(Tok::Semi)?;
                StmtKind::Skip
            }
            Tok::If => return self.if_statement(id),
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr(0)?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.advance();
                let e = self.expr(0)?;
                self.expect(Tok::Semi)?;
                StmtKind::Return(e)
            }
            Tok::Assert => {
                self.advance();
                let e = self.expr(0)?;
                self.expect(Tok::Semi)?;
                StmtKind::Assert(e)
            }
            _ => {
                let lhs = self.expr(0)?;
                if *self.peek() == Tok::Assign {
                    self.advance();
                    let value = self.expr(0)?;
                    self.expect(Tok::Semi)?;
                    match lhs {
                        Expr::Var(target) => StmtKind::Assign { target, value },
                        Expr::Index(base, index) => match *base {
                            Expr::Var(target) => StmtKind::ArrayStore {
                                target,
                                index: *index,
                                value,
                            },
                            _ => return Err(self.error("array store target must be a variable")),
                        },
                        _ => return Err(self.error("invalid assignment target")),
                    }
                } else {
                    self.expect(Tok::Semi)?;
                    StmtKind::Expr(lhs)
                }
            }
        };
        Ok(Statement::new(id, kind))
    }

    fn if_statement(&mut self, id: StatementId) -> Result<Statement, LangError> {
        self.enter()?;
        self.expect(Tok::If)?;
        self.expect(Tok::LParen)?;
        let cond = self.expr(0)?;
        self.expect(Tok::RParen)?;
        let then_block = self.block()?;
        let else_block = if *self.peek() == Tok::Else {
            self.advance();
            if *self.peek() == Tok::If {
                let nested_id = StatementId(self.next_id);
                self.next_id += 1;
                self.positions.push((nested_id, self.tokens[self.pos].line));
                Block::new(vec![self.if_statement(nested_id)?])
            } else {
                self.block()?
            }
        } else {
            Block::default()
        };
        self.leave();
        Ok(Statement::new(
            id,
            StmtKind::If {
                cond,
                then_block,
                else_block,
            },
        ))
    }

    fn binary_op(tok: &Tok) -> Option<BinaryOp> {
        Some(match tok {
            Tok::OrOr => BinaryOp::Or,
            Tok::AndAnd => BinaryOp::And,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::Plus => BinaryOp::Add,
            Tok::Minus => BinaryOp::Sub,
            Tok::Star => BinaryOp::Mul,
            Tok::Slash => BinaryOp::Div,
            Tok::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        self.enter()?;
        let mut lhs = self.unary()?;
        while let Some(op) = Self::binary_op(self.peek()) {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.expr(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        self.leave();
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        self.enter()?;
        let e = match self.peek() {
            Tok::Bang => {
                self.advance();
                Expr::unary(UnaryOp::Not, self.unary()?)
            }
            Tok::Minus => {
                self.advance();
                if let Tok::Int(magnitude) = *self.peek() {
                    // a minus sign directly before a literal is part of it
                    self.advance();
                    let value = 0i64.wrapping_sub_unsigned(magnitude);
                    self.postfix(Expr::Int(value))?
                } else {
                    Expr::unary(UnaryOp::Neg, self.unary()?)
                }
            }
            _ => {
                let base = self.primary()?;
                self.postfix(base)?
            }
        };
        self.leave();
        Ok(e)
    }

    fn postfix(&mut self, mut base: Expr) -> Result<Expr, LangError> {
        while *self.peek() == Tok::LBracket {
            self.advance();
            let index = self.expr(0)?;
            self.expect(Tok::RBracket)?;
            base = Expr::Index(Box::new(base), Box::new(index));
        }
        Ok(base)
    }

    fn args(&mut self, close: Tok) -> Result<Vec<Expr>, LangError> {
        let mut args = Vec::new();
        if *self.peek() != close {
            loop {
                args.push(self.expr(0)?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(close)?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                if v > i64::MAX as u64 {
                    return Err(self.error(format!("integer literal `{v}` out of range")));
                }
                self.advance();
                Ok(Expr::Int(v as i64))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(name) => {
                self.advance();
                if *self.peek() == Tok::LParen {
                    self.advance();
                    let args = self.args(Tok::RParen)?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                self.advance();
                Ok(Expr::Array(self.args(Tok::RBracket)?))
            }
            other => Err(self.error(format!("expected expression, found {}", other.describe()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source_has_no_functions() {
        let p = parse("").unwrap();
        assert!(p.functions.is_empty());
        assert_eq!(p.statement_count(), 0);
    }

    #[test]
    fn minimal_unit() {
        let p = parse("fn f(x){ return x; }").unwrap();
        assert_eq!(p.functions.len(), 1);
        let stmts = p.statements();
        assert_eq!(stmts.len(), 1);
        assert_eq!(stmts[0].id, StatementId(0));
        assert_eq!(stmts[0].kind, StmtKind::Return(Expr::var("x")));
    }

    #[test]
    fn ids_are_preorder() {
        let p = parse(
            "fn f(x) { if (x) { a = 1; while (a < 3) { a = a + 1; } } else { b = 2; } return a; }",
        )
        .unwrap();
        let ids: Vec<u32> = p.statements().iter().map(|s| s.id.0).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
        assert!(matches!(
            p.statement(StatementId(2)).unwrap().kind,
            StmtKind::While { .. }
        ));
        assert!(
            matches!(p.statement(StatementId(4)).unwrap().kind, StmtKind::Assign { ref target, .. } if target == "b")
        );
    }

    #[test]
    fn else_if_chains_nest() {
        let p = parse(
            "fn f(x) { if (x < 0) { return 0; } else if (x < 5) { return 1; } else { return 2; } }",
        )
        .unwrap();
        let ids: Vec<u32> = p.statements().iter().map(|s| s.id.0).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("a - b - c * d < e && !f || g").unwrap();
        let expected = Expr::binary(
            BinaryOp::Or,
            Expr::binary(
                BinaryOp::And,
                Expr::binary(
                    BinaryOp::Lt,
                    Expr::binary(
                        BinaryOp::Sub,
                        Expr::binary(BinaryOp::Sub, Expr::var("a"), Expr::var("b")),
                        Expr::binary(BinaryOp::Mul, Expr::var("c"), Expr::var("d")),
                    ),
                    Expr::var("e"),
                ),
                Expr::unary(UnaryOp::Not, Expr::var("f")),
            ),
            Expr::var("g"),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-5").unwrap(), Expr::Int(-5));
        assert_eq!(
            parse_expr("-9223372036854775808").unwrap(),
            Expr::Int(i64::MIN)
        );
        assert_eq!(
            parse_expr("-(5)").unwrap(),
            Expr::unary(UnaryOp::Neg, Expr::Int(5))
        );
        assert_eq!(
            parse_expr("x - -1").unwrap(),
            Expr::binary(BinaryOp::Sub, Expr::var("x"), Expr::Int(-1))
        );
        assert!(parse_expr("9223372036854775808").is_err());
    }

    #[test]
    fn statement_forms() {
        let p = parse("fn f(a) { a[0] = 3; g(a); skip; assert a[0] == 3; }").unwrap();
        let kinds: Vec<&StmtKind> = p.statements().iter().map(|s| &s.kind).collect();
        assert!(matches!(kinds[0], StmtKind::ArrayStore { .. }));
        assert!(matches!(kinds[1], StmtKind::Expr(Expr::Call(..))));
        assert!(matches!(kinds[2], StmtKind::Skip));
        assert!(matches!(kinds[3], StmtKind::Assert(_)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse("fn f() {\n  x = ;\n}") {
            Err(LangError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 7)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("fn f() { 1 + 2 = 3; }").is_err());
        assert!(parse("fn f() { return 1; ").is_err());
        assert!(parse("x = 1;").is_err());
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let src = format!(
            "fn f() {{ return {}1{}; }}",
            "(".repeat(5000),
            ")".repeat(5000)
        );
        assert!(matches!(parse(&src), Err(LangError::Syntax { .. })));
        let src = format!("fn f() {{ return {}1; }}", "!".repeat(5000));
        assert!(parse(&src).is_err());
    }

    #[test]
    fn positions_are_recorded() {
        let p = parse_named("fn f() {\n  x = 1;\n\n  return x;\n}\n", "src/a.mini").unwrap();
        assert_eq!(p.position(StatementId(1)).unwrap().line, 4);
        assert_eq!(p.position(StatementId(0)).unwrap().file, "src/a.mini");
    }
}
