//! Recursive-descent parser producing a [`Program`].

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::value::{Type, NEG_INF};
use super::ParseError;

/// Parse source text without the declared-before-use check.
pub fn parse_unchecked(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_id: 0,
        spans: BTreeMap::new(),
    };
    let program = p.program()?;
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_id: StmtId,
    spans: BTreeMap<StmtId, Span>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Keyword(k) => format!("`{k}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(&self.peek().tok, Tok::Keyword(q) if *q == k)
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> PResult<()> {
        if self.is_keyword(k) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{k}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => {
                let d = Self::describe(other);
                self.error(format!("expected identifier, found {d}"))
            }
        }
    }

    fn at_type(&self) -> bool {
        self.is_keyword("int") || self.is_keyword("bool") || self.is_keyword("string")
    }

    fn parse_type(&mut self) -> PResult<Type> {
        if self.is_keyword("int") {
            self.bump();
            if self.is_punct("[") {
                self.bump();
                self.expect_punct("]")?;
                return Ok(Type::IntArray);
            }
            return Ok(Type::Int);
        }
        if self.is_keyword("bool") {
            self.bump();
            return Ok(Type::Bool);
        }
        if self.is_keyword("string") {
            self.bump();
            return Ok(Type::Str);
        }
        self.error(format!("expected type, found {}", Self::describe(&self.peek().tok)))
    }

    fn program(&mut self) -> PResult<Program> {
        self.expect_keyword("fn")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let readonly = if self.is_keyword("readonly") {
                    self.bump();
                    true
                } else {
                    false
                };
                let ty = self.parse_type()?;
                let pname = self.ident()?;
                params.push(Param {
                    name: pname,
                    ty,
                    readonly,
                });
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        if self.peek().tok != Tok::Eof {
            return self.error(format!(
                "unexpected {} after function body",
                Self::describe(&self.peek().tok)
            ));
        }
        Ok(Program {
            name,
            params,
            body,
            spans: std::mem::take(&mut self.spans),
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.peek().tok == Tok::Eof {
                return self.error("expected `}`, found end of input");
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn open_stmt(&mut self) -> StmtId {
        let id = self.next_id;
        self.next_id += 1;
        let t = self.peek();
        self.spans.insert(
            id,
            Span {
                line: t.line,
                col: t.col,
            },
        );
        id
    }

    fn statement(&mut self) -> PResult<Stmt> {
        if self.is_keyword("if") {
            return self.if_statement();
        }
        if self.is_keyword("while") {
            let id = self.open_stmt();
            self.bump();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = self.block()?;
            return Ok(Stmt {
                id,
                kind: StmtKind::While { cond, body },
            });
        }
        if self.is_keyword("for") {
            return self.for_statement();
        }
        let stmt = self.simple_statement()?;
        self.expect_punct(";")?;
        Ok(stmt)
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        let id = self.open_stmt();
        self.expect_keyword("if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_block = self.block()?;
        let else_block = if self.is_keyword("else") {
            self.bump();
            if self.is_keyword("if") {
                vec![self.if_statement()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            id,
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
        })
    }

    fn for_statement(&mut self) -> PResult<Stmt> {
        let id = self.open_stmt();
        self.expect_keyword("for")?;
        self.expect_punct("(")?;
        let is_foreach = self.at_type()
            && match (self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
                (Tok::Ident(_), Tok::Punct(":"), _) => true,
                (Tok::Punct("["), Tok::Punct("]"), Tok::Ident(_)) => {
                    matches!(self.peek_at(4), Tok::Punct(":"))
                }
                _ => false,
            };
        if is_foreach {
            let ty = self.parse_type()?;
            let name = self.ident()?;
            self.expect_punct(":")?;
            let iter = self.expr()?;
            self.expect_punct(")")?;
            let body = self.block()?;
            return Ok(Stmt {
                id,
                kind: StmtKind::ForEach {
                    name,
                    ty,
                    iter,
                    body,
                },
            });
        }
        let init = self.simple_statement()?;
        if !matches!(init.kind, StmtKind::Declare { .. } | StmtKind::Assign { .. }) {
            return self.error("for-loop initializer must be a declaration or assignment");
        }
        self.expect_punct(";")?;
        let cond = self.expr()?;
        self.expect_punct(";")?;
        let update = self.simple_statement()?;
        if !matches!(update.kind, StmtKind::Assign { .. }) {
            return self.error("for-loop update must be an assignment");
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        Ok(Stmt {
            id,
            kind: StmtKind::For {
                init: Box::new(init),
                cond,
                update: Box::new(update),
                body,
            },
        })
    }

    /// Declaration, assignment, builtin call or return, without the `;`.
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let id = self.open_stmt();
        if self.at_type() {
            let ty = self.parse_type()?;
            let name = self.ident()?;
            let init = if self.is_punct("=") {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            return Ok(Stmt {
                id,
                kind: StmtKind::Declare { name, ty, init },
            });
        }
        if self.is_keyword("return") {
            self.bump();
            let value = if self.is_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            return Ok(Stmt {
                id,
                kind: StmtKind::Return(value),
            });
        }
        let builtin = match &self.peek().tok {
            Tok::Keyword("print") => Some(Builtin::Print),
            Tok::Keyword("append") => Some(Builtin::Append),
            Tok::Keyword("swap") => Some(Builtin::Swap),
            Tok::Keyword("len") => Some(Builtin::Len),
            _ => None,
        };
        if let Some(builtin) = builtin {
            self.bump();
            let args = self.call_args()?;
            let arity_ok = match builtin {
                Builtin::Print => args.len() <= 1,
                Builtin::Append => args.len() == 2,
                Builtin::Swap => args.len() == 3,
                Builtin::Len => args.len() == 1,
            };
            if !arity_ok {
                return self.error(format!("wrong number of arguments to `{}`", builtin.name()));
            }
            if matches!(builtin, Builtin::Append | Builtin::Swap) && !matches!(args[0], Expr::Var(_)) {
                return self.error(format!("first argument of `{}` must be a variable", builtin.name()));
            }
            return Ok(Stmt {
                id,
                kind: StmtKind::Call { builtin, args },
            });
        }
        let name = self.ident()?;
        let target = if self.is_punct("[") {
            self.bump();
            let idx = self.expr()?;
            self.expect_punct("]")?;
            LValue::Index(name, idx)
        } else {
            LValue::Var(name)
        };
        let op = match &self.peek().tok {
            Tok::Punct("=") => AssignOp::Set,
            Tok::Punct("+=") => AssignOp::Add,
            Tok::Punct("-=") => AssignOp::Sub,
            Tok::Punct("*=") => AssignOp::Mul,
            Tok::Punct("/=") => AssignOp::Div,
            other => {
                let d = Self::describe(other);
                return self.error(format!("expected assignment operator, found {d}"));
            }
        };
        self.bump();
        let value = self.expr()?;
        Ok(Stmt {
            id,
            kind: StmtKind::Assign { target, op, value },
        })
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let Tok::Punct(p) = &self.peek().tok else {
            return None;
        };
        Some(match *p {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "&&" => BinaryOp::And,
            "||" => BinaryOp::Or,
            _ => return None,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_punct("-") {
            // `-5` and `-inf` are literals; `-(5)` stays a negation.
            match self.peek_at(1) {
                Tok::Int(v) => {
                    let v = *v;
                    self.bump();
                    self.bump();
                    return self.postfix(Expr::Int(-v));
                }
                Tok::Keyword("inf") => {
                    self.bump();
                    self.bump();
                    return self.postfix(Expr::Int(NEG_INF));
                }
                _ => {}
            }
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(e)));
        }
        if self.is_punct("!") {
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(e)));
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.is_punct("[") {
            self.bump();
            let idx = self.expr()?;
            self.expect_punct("]")?;
            e = Expr::Index(Box::new(e), Box::new(idx));
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Keyword("true") => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Keyword("false") => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Keyword("inf") => self.error("`inf` is only valid as `-inf`"),
            Tok::Keyword("len") => {
                self.bump();
                let mut args = self.call_args()?;
                if args.len() != 1 {
                    return self.error("`len` takes one argument");
                }
                Ok(Expr::Len(Box::new(args.remove(0))))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_punct("]") {
                    loop {
                        items.push(self.expr()?);
                        if self.is_punct(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_punct("]")?;
                Ok(Expr::Array(items))
            }
            other => {
                let d = Self::describe(&other);
                self.error(format!("expected expression, found {d}"))
            }
        }
    }
}
