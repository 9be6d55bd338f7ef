//! Abstract syntax of MiniImp programs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::value::Type;

/// Pre-order index of a statement within its program.
pub type StmtId = u32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub readonly: bool,
}

/// One function: the unit of execution, mutation, diffing and embedding.
#[derive(Clone, Debug)]
pub struct Program {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    /// Source location of every statement parsed from text. Programs built
    /// or rewritten in memory may have no entry for some ids.
    pub spans: BTreeMap<StmtId, Span>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.body == other.body
    }
}

impl Eq for Program {}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binary(self) -> Option<BinaryOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinaryOp::Add),
            AssignOp::Sub => Some(BinaryOp::Sub),
            AssignOp::Mul => Some(BinaryOp::Mul),
            AssignOp::Div => Some(BinaryOp::Div),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Print,
    Append,
    Len,
    Swap,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Print => "print",
            Builtin::Append => "append",
            Builtin::Len => "len",
            Builtin::Swap => "swap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Declare {
        name: String,
        ty: Type,
        init: Option<Expr>,
    },
    Assign {
        target: LValue,
        op: AssignOp,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Box<Stmt>,
        cond: Expr,
        update: Box<Stmt>,
        body: Vec<Stmt>,
    },
    /// `for (T x : e) { ... }` over the elements of an array or the
    /// characters of a string.
    ForEach {
        name: String,
        ty: Type,
        iter: Expr,
        body: Vec<Stmt>,
    },
    Call {
        builtin: Builtin,
        args: Vec<Expr>,
    },
    Return(Option<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
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
            BinaryOp::Mod => "%",
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

    /// Binding strength; higher binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Array(Vec<Expr>),
    Var(String),
    Index(Box<Expr>, Box<Expr>),
    Len(Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Every variable name read by this expression, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    pub fn collect_variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) => {}
            Expr::Array(items) => items.iter().for_each(|e| e.collect_variables(out)),
            Expr::Var(n) => {
                if !out.iter().any(|x| x == n) {
                    out.push(n.clone());
                }
            }
            Expr::Index(a, b) | Expr::Binary(_, a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
            Expr::Len(e) | Expr::Unary(_, e) => e.collect_variables(out),
        }
    }

    /// Apply `f` to every sub-expression, children first.
    pub fn rewrite(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Var(_) => {}
            Expr::Array(items) => items.iter_mut().for_each(|e| e.rewrite(f)),
            Expr::Index(a, b) | Expr::Binary(_, a, b) => {
                a.rewrite(f);
                b.rewrite(f);
            }
            Expr::Len(e) | Expr::Unary(_, e) => e.rewrite(f),
        }
        f(self);
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Var(_) => {}
            Expr::Array(items) => items.iter().for_each(|e| e.visit(f)),
            Expr::Index(a, b) | Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Len(e) | Expr::Unary(_, e) => e.visit(f),
        }
    }
}

/// Which nested block of a compound statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockSel {
    Then,
    Else,
    Body,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt { id: 0, kind }
    }

    pub fn is_compound(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::For { .. } | StmtKind::ForEach { .. }
        )
    }

    pub fn block(&self, sel: BlockSel) -> Option<&Vec<Stmt>> {
        match (&self.kind, sel) {
            (StmtKind::If { then_block, .. }, BlockSel::Then) => Some(then_block),
            (StmtKind::If { else_block, .. }, BlockSel::Else) => Some(else_block),
            (StmtKind::While { body, .. }, BlockSel::Body)
            | (StmtKind::For { body, .. }, BlockSel::Body)
            | (StmtKind::ForEach { body, .. }, BlockSel::Body) => Some(body),
            _ => None,
        }
    }

    pub fn block_mut(&mut self, sel: BlockSel) -> Option<&mut Vec<Stmt>> {
        match (&mut self.kind, sel) {
            (StmtKind::If { then_block, .. }, BlockSel::Then) => Some(then_block),
            (StmtKind::If { else_block, .. }, BlockSel::Else) => Some(else_block),
            (StmtKind::While { body, .. }, BlockSel::Body)
            | (StmtKind::For { body, .. }, BlockSel::Body)
            | (StmtKind::ForEach { body, .. }, BlockSel::Body) => Some(body),
            _ => None,
        }
    }

    /// The nested blocks of this statement, in source order.
    pub fn blocks(&self) -> Vec<(BlockSel, &Vec<Stmt>)> {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => vec![(BlockSel::Then, then_block), (BlockSel::Else, else_block)],
            StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::ForEach { body, .. } => {
                vec![(BlockSel::Body, body)]
            }
            _ => Vec::new(),
        }
    }

    /// Variable written by this statement when it executes, if any. For
    /// compound statements only `ForEach` writes (its loop variable).
    pub fn written_variable(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Declare { name, init: Some(_), .. } => Some(name),
            StmtKind::Assign { target, .. } => Some(target.name()),
            StmtKind::Call {
                builtin: Builtin::Append | Builtin::Swap,
                args,
            } => match args.first() {
                Some(Expr::Var(n)) => Some(n),
                _ => None,
            },
            StmtKind::ForEach { name, .. } => Some(name),
            _ => None,
        }
    }

    /// Visit this statement and every nested statement in pre-order
    /// (`For` visits init, then update, then body).
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::For {
                init, update, body, ..
            } => {
                init.walk(f);
                update.walk(f);
                body.iter().for_each(|s| s.walk(f));
            }
            _ => {
                for (_, b) in self.blocks() {
                    b.iter().for_each(|s| s.walk(f));
                }
            }
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        f(self);
        match &mut self.kind {
            StmtKind::For {
                init, update, body, ..
            } => {
                init.walk_mut(f);
                update.walk_mut(f);
                body.iter_mut().for_each(|s| s.walk_mut(f));
            }
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                then_block.iter_mut().for_each(|s| s.walk_mut(f));
                else_block.iter_mut().for_each(|s| s.walk_mut(f));
            }
            StmtKind::While { body, .. } | StmtKind::ForEach { body, .. } => {
                body.iter_mut().for_each(|s| s.walk_mut(f));
            }
            _ => {}
        }
    }

    /// Expressions owned directly by this statement (not by nested ones).
    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            StmtKind::Declare { init, .. } => init.iter_mut().collect(),
            StmtKind::Assign { target, value, .. } => {
                let mut v = Vec::new();
                if let LValue::Index(_, idx) = target {
                    v.push(idx);
                }
                v.push(value);
                v
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => {
                vec![cond]
            }
            StmtKind::ForEach { iter, .. } => vec![iter],
            StmtKind::Call { args, .. } => args.iter_mut().collect(),
            StmtKind::Return(e) => e.iter_mut().collect(),
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Declare { init, .. } => init.iter().collect(),
            StmtKind::Assign { target, value, .. } => {
                let mut v = Vec::new();
                if let LValue::Index(_, idx) = target {
                    v.push(idx);
                }
                v.push(value);
                v
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => {
                vec![cond]
            }
            StmtKind::ForEach { iter, .. } => vec![iter],
            StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
        }
    }
}

impl Program {
    /// Visit every statement in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        self.body.iter().for_each(|s| s.walk(f));
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        self.body.iter_mut().for_each(|s| s.walk_mut(f));
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn find(&self, id: StmtId) -> Option<&Stmt> {
        let mut found = None;
        self.walk(&mut |s| {
            if s.id == id && found.is_none() {
                found = Some(s);
            }
        });
        found
    }

    /// Reassign statement ids in pre-order starting at 0. Spans are remapped
    /// along with the ids.
    pub fn renumber(&mut self) {
        let mut next: StmtId = 0;
        let mut remap = BTreeMap::new();
        self.walk_mut(&mut |s| {
            remap.insert(s.id, next);
            s.id = next;
            next += 1;
        });
        let spans = std::mem::take(&mut self.spans);
        // Ids produced by in-memory rewrites may repeat; keep only spans of
        // programs whose ids were already unique.
        if remap.len() as u32 == next {
            self.spans = spans
                .into_iter()
                .filter_map(|(old, sp)| remap.get(&old).map(|new| (*new, sp)))
                .collect();
        }
    }

    /// Variables that the program may write, in first-declaration order:
    /// writable parameters first, then locals in pre-order.
    pub fn tracked_variables(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .params
            .iter()
            .filter(|p| !p.readonly)
            .map(|p| p.name.clone())
            .collect();
        self.walk(&mut |s| {
            let name = match &s.kind {
                StmtKind::Declare { name, .. } | StmtKind::ForEach { name, .. } => Some(name),
                _ => None,
            };
            if let Some(n) = name {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    pub fn readonly_params(&self) -> Vec<String> {
        self.params
            .iter()
            .filter(|p| p.readonly)
            .map(|p| p.name.clone())
            .collect()
    }
}
