//! MiniImp: a small imperative language with integers, booleans, strings and
//! integer arrays, whose interpreter records every write to a variable.

pub mod ast;
mod check;
pub mod interp;
pub mod lexer;
mod parser;
pub mod printer;
pub mod value;

use thiserror::Error;

pub use ast::{BinaryOp, BlockSel, Expr, LValue, Param, Program, Stmt, StmtId, StmtKind};
pub use check::check;
pub use interp::{evaluate_write, run, Env, ExecOptions, Execution, Verdict, WriteEvent, DEFAULT_BUDGET};
pub use parser::parse_unchecked;
pub use printer::{print_expr, print_program, print_stmt};
pub use value::{Type, Value};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("undeclared variable `{name}` at {line}:{col}")]
    UndeclaredVariable { name: String, line: u32, col: u32 },
    #[error("write to read-only parameter `{name}` at {line}:{col}")]
    ReadOnlyWrite { name: String, line: u32, col: u32 },
}

/// Parse and check a program.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let program = parse_unchecked(source)?;
    check(&program)?;
    Ok(program)
}

/// Canonical source text: parse then print.
pub fn canonicalize(source: &str) -> Result<String, ParseError> {
    parse(source).map(|p| print_program(&p))
}
