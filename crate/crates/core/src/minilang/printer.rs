//! Canonical pretty-printer. `parse(print(p)) == p` for every program.

use super::ast::*;
use super::value::NEG_INF;

const INDENT: &str = "    ";

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

fn int_literal(v: i64) -> String {
    if v == NEG_INF {
        "-inf".to_string()
    } else {
        v.to_string()
    }
}

fn is_negative_literal(e: &Expr) -> bool {
    matches!(e, Expr::Int(v) if *v < 0)
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => int_literal(*v),
        Expr::Bool(b) => b.to_string(),
        Expr::Str(s) => quote(s),
        Expr::Array(items) => {
            let parts: Vec<String> = items.iter().map(print_expr).collect();
            format!("[{}]", parts.join(", "))
        }
        Expr::Var(n) => n.clone(),
        Expr::Index(base, idx) => {
            let b = match **base {
                Expr::Binary(..) | Expr::Unary(..) => format!("({})", print_expr(base)),
                _ if is_negative_literal(base) => format!("({})", print_expr(base)),
                _ => print_expr(base),
            };
            format!("{b}[{}]", print_expr(idx))
        }
        Expr::Len(inner) => format!("len({})", print_expr(inner)),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            };
            // `-5` would re-parse as a literal, so negated literals keep parens.
            let needs_parens = matches!(**inner, Expr::Binary(..) | Expr::Int(_))
                || (*op == UnaryOp::Neg && matches!(**inner, Expr::Unary(UnaryOp::Neg, _)));
            if needs_parens {
                format!("{sym}({})", print_expr(inner))
            } else {
                format!("{sym}{}", print_expr(inner))
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let l = match &**lhs {
                Expr::Binary(lop, ..) if lop.precedence() < prec => format!("({})", print_expr(lhs)),
                _ => print_expr(lhs),
            };
            let r = match &**rhs {
                Expr::Binary(rop, ..) if rop.precedence() <= prec => format!("({})", print_expr(rhs)),
                _ => print_expr(rhs),
            };
            format!("{l} {} {r}", op.symbol())
        }
    }
}

/// A simple statement without its terminating `;`.
fn simple(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Declare { name, ty, init } => match init {
            Some(e) => format!("{ty} {name} = {}", print_expr(e)),
            None => format!("{ty} {name}"),
        },
        StmtKind::Assign { target, op, value } => {
            let t = match target {
                LValue::Var(n) => n.clone(),
                LValue::Index(n, idx) => format!("{n}[{}]", print_expr(idx)),
            };
            format!("{t} {} {}", op.symbol(), print_expr(value))
        }
        StmtKind::Call { builtin, args } => {
            let parts: Vec<String> = args.iter().map(print_expr).collect();
            format!("{}({})", builtin.name(), parts.join(", "))
        }
        StmtKind::Return(Some(e)) => format!("return {}", print_expr(e)),
        StmtKind::Return(None) => "return".to_string(),
        _ => header(s),
    }
}

/// One-line rendering of a statement: the full text for simple statements,
/// the header (without the opening brace) for compound ones.
pub fn header(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::If { cond, .. } => format!("if ({})", print_expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", print_expr(cond)),
        StmtKind::For {
            init, cond, update, ..
        } => format!(
            "for ({}; {}; {})",
            simple(init),
            print_expr(cond),
            simple(update)
        ),
        StmtKind::ForEach { name, ty, iter, .. } => {
            format!("for ({ty} {name} : {})", print_expr(iter))
        }
        _ => format!("{};", simple(s)),
    }
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    out.push_str(&pad);
    out.push_str(&header(s));
    match &s.kind {
        StmtKind::If {
            then_block,
            else_block,
            ..
        } => {
            out.push_str(" {\n");
            block(out, then_block, depth + 1);
            out.push_str(&pad);
            if else_block.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                block(out, else_block, depth + 1);
                out.push_str(&pad);
                out.push_str("}\n");
            }
        }
        StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::ForEach { body, .. } => {
            out.push_str(" {\n");
            block(out, body, depth + 1);
            out.push_str(&pad);
            out.push_str("}\n");
        }
        _ => out.push('\n'),
    }
}

/// Canonical multi-line text of a single statement at indentation zero.
pub fn print_stmt(s: &Stmt) -> String {
    let mut out = String::new();
    stmt(&mut out, s, 0);
    out
}

pub fn print_program(p: &Program) -> String {
    let params: Vec<String> = p
        .params
        .iter()
        .map(|q| {
            if q.readonly {
                format!("readonly {} {}", q.ty, q.name)
            } else {
                format!("{} {}", q.ty, q.name)
            }
        })
        .collect();
    let mut out = format!("fn {}({}) {{\n", p.name, params.join(", "));
    block(&mut out, &p.body, 1);
    out.push_str("}\n");
    out
}
