//! Mutation operators, one group per error class of each task.
//!
//! A mutator inspects a program and lists every concrete way it applies as
//! a batch of statement edits. The edits double as the signatures used to
//! tag repair corrections with an error class.

use rand::Rng;

use super::tasks::{Task, TaskId};
use super::SynthError;
use crate::edit::{self, all_paths, header_of, Edit, StmtPath};
use crate::minilang::ast::*;
use crate::minilang::Program;

pub type Mutation = Vec<Edit>;

#[derive(Clone, Copy)]
pub struct Mutator {
    pub id: &'static str,
    pub class: &'static str,
    pub find: fn(&Program) -> Vec<Mutation>,
}

impl std::fmt::Debug for Mutator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mutator({} -> {})", self.id, self.class)
    }
}

impl Mutator {
    pub fn applicable(&self, p: &Program) -> Vec<Mutation> {
        (self.find)(p)
    }
}

/// Apply one randomly chosen application of `m` to `p`.
pub fn mutate<R: Rng>(p: &Program, m: &Mutator, rng: &mut R) -> Result<Program, SynthError> {
    let options = m.applicable(p);
    if options.is_empty() {
        return Err(SynthError::NotApplicable(m.id.to_string()));
    }
    let pick = &options[rng.gen_range(0..options.len())];
    edit::apply(p, pick).map_err(|e| SynthError::Internal(e.to_string()))
}

pub fn mutators(task: TaskId) -> Vec<Mutator> {
    let m = |id, class, find| Mutator { id, class, find };
    match task {
        TaskId::Chessboard => vec![
            m("o_to_zero", "misprint", |p| literal_swap(p, "O", &["0"])),
            m("lower_case", "misprint", |p| {
                let mut v = literal_swap(p, "O", &["o"]);
                v.extend(literal_swap(p, "X", &["x"]));
                v
            }),
            m("flip_parity", "rows_switched", flip_parity),
            m("flip_start_flag", "rows_switched", flip_top_bool),
            m("swap_branch_literals", "rows_switched", swap_branch_literals),
            m("swap_start_literals", "rows_switched", swap_top_literals),
            m("drop_row_term", "no_switch", drop_row_term),
            m("drop_row_toggle", "no_switch", drop_row_toggle),
            m("drop_row_swap", "no_switch", drop_swap_triple),
            m("same_branch_literal", "single_char", same_branch_literal),
            m("constant_branch", "single_char", constant_branch),
            m("duplicate_start_literal", "single_char", duplicate_top_literal),
            m("padded_literal", "extra_chars", |p| {
                let mut v = literal_swap(p, "X", &["X ", "X|"]);
                v.extend(literal_swap(p, "O", &["O ", "O|"]));
                v
            }),
            m("append_separator", "extra_chars", append_separator),
            m("outer_bound", "row_count", |p| loop_bound(p, 0)),
            m("inner_bound", "column_count", |p| loop_bound(p, 1)),
            m("drop_row_reset", "wrong_format", drop_row_reset),
            m("hoist_row_decl", "wrong_format", hoist_row_decl),
        ],
        TaskId::CountParentheses => vec![
            m("empty_guard_value", "miss_empty", empty_guard_value),
            m("drop_empty_guard", "miss_empty", drop_empty_guard),
            m("other_brackets", "symbol_confusion", other_brackets),
            m("drop_final_check", "unmatched", drop_final_check),
            m("weaken_final_check", "unmatched", weaken_final_check),
            m("count_instead_of_max", "count_pairs", count_instead_of_max),
            m("nonzero_initial_max", "assume_nested", nonzero_initial_max),
            m("close_on_anything", "count_ignored", close_on_anything),
        ],
        TaskId::BinaryDigits => vec![
            m("drop_zero_guard", "miss_zero", drop_zero_guard),
            m("decimal_base", "decimal_digits", decimal_base),
            m("wrong_shift", "shift_arithmetic", wrong_shift),
            m("numeric_accumulator", "add_digits", numeric_accumulator),
            m("early_stop", "miss_msb", early_stop),
            m("skip_top_bit", "miss_msb", skip_top_bit),
        ],
    }
}

/// All mutators of `task` targeting the class at `class_index`.
pub fn mutators_for_class(task: &Task, class_index: usize) -> Vec<Mutator> {
    let name = task.classes[class_index].name;
    mutators(task.id).into_iter().filter(|m| m.class == name).collect()
}

// ---------------------------------------------------------------------------
// helpers

struct Site<'a> {
    path: StmtPath,
    stmt: &'a Stmt,
    loop_depth: usize,
}

fn sites(p: &Program) -> Vec<Site<'_>> {
    all_paths(p)
        .into_iter()
        .map(|(path, stmt)| {
            let mut depth = 0;
            for k in 0..path.block.len() {
                let (i, _) = path.block[k];
                let parent = edit::stmt_at(p, &StmtPath::new(path.block[..k].to_vec(), i)).unwrap();
                if matches!(
                    parent.kind,
                    StmtKind::While { .. } | StmtKind::For { .. } | StmtKind::ForEach { .. }
                ) {
                    depth += 1;
                }
            }
            Site {
                path,
                stmt,
                loop_depth: depth,
            }
        })
        .collect()
}

fn modify(path: &StmtPath, new: Stmt) -> Edit {
    let compound = new.is_compound();
    Edit::Replace {
        path: path.clone(),
        with: if compound { header_of(&new) } else { new },
        header_only: compound,
    }
}

/// Rewrite every expression owned by `s` (including a For header's init and
/// update); `None` if nothing changed.
fn rewrite_stmt(s: &Stmt, f: &mut dyn FnMut(&mut Expr)) -> Option<Stmt> {
    let mut new = s.clone();
    for e in new.exprs_mut() {
        e.rewrite(f);
    }
    if let StmtKind::For { init, update, .. } = &mut new.kind {
        for e in init.exprs_mut() {
            e.rewrite(f);
        }
        for e in update.exprs_mut() {
            e.rewrite(f);
        }
    }
    (header_of(&new) != header_of(s)).then_some(new)
}

fn contains_expr(s: &Stmt, pred: &dyn Fn(&Expr) -> bool) -> bool {
    let mut hit = false;
    let mut check = |e: &Expr| hit |= pred(e);
    for e in s.exprs() {
        e.visit(&mut check);
    }
    hit
}

fn stmt(src: &str) -> Stmt {
    let p = crate::minilang::parse_unchecked(&format!("fn f() {{ {src} }}")).expect("mutator template parses");
    p.body.into_iter().next().expect("template has a statement")
}

fn str_lit(e: &Expr, v: &str) -> bool {
    matches!(e, Expr::Str(s) if s == v)
}

/// Simple statements whose expressions mention the literal `from`, each
/// rewritten to every replacement in `to`.
fn literal_swap(p: &Program, from: &str, to: &[&str]) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        if site.stmt.is_compound() {
            continue;
        }
        for t in to {
            let new = rewrite_stmt(site.stmt, &mut |e| {
                if str_lit(e, from) {
                    *e = Expr::Str(t.to_string());
                }
            });
            if let Some(new) = new {
                out.push(vec![modify(&site.path, new)]);
            }
        }
    }
    out
}

/// Literal "X"/"O" written by a single-statement block, if any.
fn branch_literal(block: &[Stmt]) -> Option<&'static str> {
    if block.len() != 1 {
        return None;
    }
    ["X", "O"]
        .into_iter()
        .find(|lit| contains_expr(&block[0], &|e| str_lit(e, lit)))
}

fn replace_literal(s: &Stmt, from: &str, to: &str) -> Stmt {
    rewrite_stmt(s, &mut |e| {
        if str_lit(e, from) {
            *e = Expr::Str(to.to_string());
        }
    })
    .unwrap_or_else(|| s.clone())
}

/// If/else statements whose branches write "X" and "O" respectively.
fn xo_branches(p: &Program) -> Vec<(StmtPath, &Stmt, &'static str, &'static str)> {
    let mut out = Vec::new();
    for site in sites(p) {
        if let StmtKind::If {
            then_block,
            else_block,
            ..
        } = &site.stmt.kind
        {
            if let (Some(a), Some(b)) = (branch_literal(then_block), branch_literal(else_block)) {
                if a != b {
                    out.push((site.path.clone(), site.stmt, a, b));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// chessboard

fn flip_parity(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        let StmtKind::If { cond, .. } = &site.stmt.kind else {
            continue;
        };
        if let Expr::Binary(BinaryOp::Eq, lhs, rhs) = cond {
            if matches!(**lhs, Expr::Binary(BinaryOp::Mod, _, ref m) if **m == Expr::Int(2)) {
                if let Expr::Int(k @ (0 | 1)) = **rhs {
                    let mut a = site.stmt.clone();
                    if let StmtKind::If { cond, .. } = &mut a.kind {
                        *cond = Expr::binary(BinaryOp::Eq, (**lhs).clone(), Expr::Int(1 - k));
                    }
                    let mut b = site.stmt.clone();
                    if let StmtKind::If { cond, .. } = &mut b.kind {
                        *cond = Expr::binary(BinaryOp::Ne, (**lhs).clone(), Expr::Int(k));
                    }
                    out.push(vec![modify(&site.path, a)]);
                    out.push(vec![modify(&site.path, b)]);
                }
            }
        }
    }
    out
}

fn flip_top_bool(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (i, s) in p.body.iter().enumerate() {
        if let StmtKind::Declare {
            name,
            ty,
            init: Some(Expr::Bool(b)),
        } = &s.kind
        {
            let new = Stmt::new(StmtKind::Declare {
                name: name.clone(),
                ty: *ty,
                init: Some(Expr::Bool(!b)),
            });
            out.push(vec![modify(&StmtPath::top(i), new)]);
        }
    }
    out
}

fn swap_branch_literals(p: &Program) -> Vec<Mutation> {
    xo_branches(p)
        .into_iter()
        .map(|(path, s, a, b)| {
            let StmtKind::If {
                then_block,
                else_block,
                ..
            } = &s.kind
            else {
                unreachable!()
            };
            vec![
                modify(
                    &StmtPath::new(path.child(BlockSel::Then), 0),
                    replace_literal(&then_block[0], a, b),
                ),
                modify(
                    &StmtPath::new(path.child(BlockSel::Else), 0),
                    replace_literal(&else_block[0], b, a),
                ),
            ]
        })
        .collect()
}

/// Top-level string declarations initialised to "X" and "O".
fn top_literal_decls(p: &Program) -> Option<(usize, usize)> {
    let find = |lit: &str| {
        p.body.iter().position(|s| {
            matches!(&s.kind, StmtKind::Declare { init: Some(e), ty: crate::minilang::Type::Str, .. } if str_lit(e, lit))
        })
    };
    Some((find("X")?, find("O")?))
}

fn swap_top_literals(p: &Program) -> Vec<Mutation> {
    let Some((x, o)) = top_literal_decls(p) else {
        return Vec::new();
    };
    vec![vec![
        modify(&StmtPath::top(x), replace_literal(&p.body[x], "X", "O")),
        modify(&StmtPath::top(o), replace_literal(&p.body[o], "O", "X")),
    ]]
}

fn duplicate_top_literal(p: &Program) -> Vec<Mutation> {
    let Some((x, o)) = top_literal_decls(p) else {
        return Vec::new();
    };
    vec![
        vec![modify(&StmtPath::top(o), replace_literal(&p.body[o], "O", "X"))],
        vec![modify(&StmtPath::top(x), replace_literal(&p.body[x], "X", "O"))],
    ]
}

fn for_var(s: &Stmt) -> Option<&str> {
    match &s.kind {
        StmtKind::For { init, .. } => init.written_variable(),
        _ => None,
    }
}

/// `(a + b) % 2` parity test: drop the outer loop's term.
fn drop_row_term(p: &Program) -> Vec<Mutation> {
    let outer: Vec<String> = p
        .body
        .iter()
        .filter_map(|s| for_var(s).map(str::to_string))
        .collect();
    let mut out = Vec::new();
    for site in sites(p) {
        if !matches!(site.stmt.kind, StmtKind::If { .. }) {
            continue;
        }
        let new = rewrite_stmt(site.stmt, &mut |e| {
            if let Expr::Binary(BinaryOp::Add, a, b) = e {
                match (&**a, &**b) {
                    (Expr::Var(x), other) if outer.contains(x) => *e = other.clone(),
                    (other, Expr::Var(x)) if outer.contains(x) => *e = other.clone(),
                    _ => {}
                }
            }
        });
        if let Some(new) = new {
            out.push(vec![modify(&site.path, new)]);
        }
    }
    out
}

/// `flag = !flag` directly inside the outermost loop.
fn drop_row_toggle(p: &Program) -> Vec<Mutation> {
    sites(p)
        .into_iter()
        .filter(|s| s.loop_depth == 1)
        .filter(|s| {
            matches!(&s.stmt.kind, StmtKind::Assign { target: LValue::Var(t), op: AssignOp::Set, value: Expr::Unary(UnaryOp::Not, inner) }
                if **inner == Expr::Var(t.clone()))
        })
        .map(|s| vec![Edit::Delete { path: s.path }])
        .collect()
}

/// `T t = a; a = b; b = t;` in one block: delete all three.
fn drop_swap_triple(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    let paths = all_paths(p);
    for (path, s) in &paths {
        let StmtKind::Declare {
            name: t,
            init: Some(Expr::Var(a)),
            ..
        } = &s.kind
        else {
            continue;
        };
        let next = |k: usize| edit::stmt_at(p, &StmtPath::new(path.block.clone(), path.index + k));
        let is_assign = |st: Option<&Stmt>, lhs: &str, rhs: &str| {
            matches!(st.map(|x| &x.kind), Some(StmtKind::Assign { target: LValue::Var(l), op: AssignOp::Set, value: Expr::Var(r) }) if l == lhs && r == rhs)
        };
        if let Some(StmtKind::Assign {
            target: LValue::Var(a2),
            value: Expr::Var(b),
            op: AssignOp::Set,
        }) = next(1).map(|x| &x.kind)
        {
            if a2 == a && is_assign(next(2), b, t) {
                out.push(
                    (0..3)
                        .map(|k| Edit::Delete {
                            path: StmtPath::new(path.block.clone(), path.index + k),
                        })
                        .collect(),
                );
            }
        }
    }
    out
}

fn same_branch_literal(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (path, s, a, b) in xo_branches(p) {
        let StmtKind::If {
            then_block,
            else_block,
            ..
        } = &s.kind
        else {
            unreachable!()
        };
        out.push(vec![modify(
            &StmtPath::new(path.child(BlockSel::Else), 0),
            replace_literal(&else_block[0], b, a),
        )]);
        out.push(vec![modify(
            &StmtPath::new(path.child(BlockSel::Then), 0),
            replace_literal(&then_block[0], a, b),
        )]);
    }
    out
}

fn constant_branch(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (path, s, _, _) in xo_branches(p) {
        for b in [true, false] {
            let mut new = s.clone();
            if let StmtKind::If { cond, .. } = &mut new.kind {
                *cond = Expr::Bool(b);
            }
            out.push(vec![modify(&path, new)]);
        }
    }
    out
}

/// Variables that accumulate strings: `v = v + e` or `v += e` on a string.
fn accumulators(p: &Program) -> Vec<String> {
    let mut out = Vec::new();
    p.walk(&mut |s| {
        if let StmtKind::Assign {
            target: LValue::Var(v),
            op,
            value,
        } = &s.kind
        {
            let self_add = matches!(value, Expr::Binary(BinaryOp::Add, l, _) if **l == Expr::Var(v.clone()));
            let mentions_literal = contains_expr(s, &|e| str_lit(e, "X") || str_lit(e, "O") || matches!(e, Expr::Var(_)));
            if (self_add || *op == AssignOp::Add) && mentions_literal && !out.contains(v) {
                out.push(v.clone());
            }
        }
    });
    out
}

fn is_string_accumulation(s: &Stmt, v: &str) -> bool {
    match &s.kind {
        StmtKind::Assign {
            target: LValue::Var(t),
            op,
            value,
        } if t == v => {
            *op == AssignOp::Add || matches!(value, Expr::Binary(BinaryOp::Add, l, _) if **l == Expr::Var(v.to_string()))
        }
        _ => {
            let mut hit = false;
            for (_, b) in s.blocks() {
                hit |= b.iter().any(|x| is_string_accumulation(x, v));
            }
            hit
        }
    }
}

/// Insert `v = v + " "` (or `v += " "`) after the innermost-loop statement
/// that accumulates the row string.
fn append_separator(p: &Program) -> Vec<Mutation> {
    let accs = accumulators(p);
    let mut out = Vec::new();
    for site in sites(p) {
        if site.loop_depth < 2 {
            continue;
        }
        for v in &accs {
            if !is_string_accumulation(site.stmt, v) {
                continue;
            }
            // Only top-level statements of the loop body.
            let parent_is_loop = {
                let (i, _) = *site.path.block.last().unwrap();
                let parent = edit::stmt_at(p, &StmtPath::new(site.path.block[..site.path.block.len() - 1].to_vec(), i)).unwrap();
                matches!(parent.kind, StmtKind::While { .. } | StmtKind::For { .. })
            };
            if !parent_is_loop {
                continue;
            }
            for (order, src) in [format!("{v} = {v} + \" \";"), format!("{v} += \" \";")].iter().enumerate() {
                let _ = order;
                out.push(vec![Edit::Insert {
                    block: site.path.block.clone(),
                    index: site.path.index + 1,
                    order: 0,
                    stmt: stmt(src),
                }]);
            }
        }
    }
    out
}

/// Loop condition `v < k` at the given nesting depth: change the bound.
fn loop_bound(p: &Program, depth: usize) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        if site.loop_depth != depth {
            continue;
        }
        let cond = match &site.stmt.kind {
            StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => cond,
            _ => continue,
        };
        let Expr::Binary(BinaryOp::Lt, lhs, rhs) = cond else {
            continue;
        };
        let Expr::Int(k) = **rhs else { continue };
        let variants = [
            Expr::binary(BinaryOp::Lt, (**lhs).clone(), Expr::Int(k - 1)),
            Expr::binary(BinaryOp::Lt, (**lhs).clone(), Expr::Int(k + 1)),
            Expr::binary(BinaryOp::Le, (**lhs).clone(), Expr::Int(k)),
        ];
        for v in variants {
            let mut new = site.stmt.clone();
            match &mut new.kind {
                StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => *cond = v,
                _ => unreachable!(),
            }
            out.push(vec![modify(&site.path, new)]);
        }
    }
    out
}

/// `v = "";` inside a loop.
fn drop_row_reset(p: &Program) -> Vec<Mutation> {
    sites(p)
        .into_iter()
        .filter(|s| s.loop_depth >= 1)
        .filter(|s| {
            matches!(&s.stmt.kind, StmtKind::Assign { target: LValue::Var(_), op: AssignOp::Set, value } if str_lit(value, ""))
        })
        .map(|s| vec![Edit::Delete { path: s.path }])
        .collect()
}

/// Move `string v = "";` from the top of a top-level loop's body to just
/// before the loop, so the row never restarts.
fn hoist_row_decl(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (i, s) in p.body.iter().enumerate() {
        let body = match &s.kind {
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => body,
            _ => continue,
        };
        for (j, inner) in body.iter().enumerate() {
            if matches!(&inner.kind, StmtKind::Declare { init: Some(e), .. } if str_lit(e, "")) {
                out.push(vec![
                    Edit::Delete {
                        path: StmtPath::new(vec![(i, BlockSel::Body)], j),
                    },
                    Edit::Insert {
                        block: Vec::new(),
                        index: i,
                        order: 0,
                        stmt: inner.clone(),
                    },
                ]);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// count parentheses

/// `len(s) == 0` or `n == 0` where `n` holds a length.
fn is_empty_test(e: &Expr, len_vars: &[String]) -> bool {
    match e {
        Expr::Binary(BinaryOp::Eq, l, r) if **r == Expr::Int(0) => match &**l {
            Expr::Len(_) => true,
            Expr::Var(v) => len_vars.contains(v),
            _ => false,
        },
        _ => false,
    }
}

fn length_vars(p: &Program) -> Vec<String> {
    let mut out = Vec::new();
    p.walk(&mut |s| {
        if let StmtKind::Declare {
            name,
            init: Some(Expr::Len(_)),
            ..
        } = &s.kind
        {
            out.push(name.clone());
        }
    });
    out
}

fn empty_guards(p: &Program) -> Vec<Site<'_>> {
    let lv = length_vars(p);
    sites(p)
        .into_iter()
        .filter(|s| matches!(&s.stmt.kind, StmtKind::If { cond, .. } if is_empty_test(cond, &lv)))
        .collect()
}

fn empty_guard_value(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for guard in empty_guards(p) {
        let StmtKind::If { then_block, .. } = &guard.stmt.kind else {
            unreachable!()
        };
        for (j, s) in then_block.iter().enumerate() {
            let zero_write = matches!(&s.kind,
                StmtKind::Declare { init: Some(Expr::Int(0)), .. }
                | StmtKind::Assign { op: AssignOp::Set, value: Expr::Int(0), .. });
            if !zero_write {
                continue;
            }
            for v in [-1, 1] {
                let mut new = s.clone();
                match &mut new.kind {
                    StmtKind::Declare { init: Some(e), .. } | StmtKind::Assign { value: e, .. } => *e = Expr::Int(v),
                    _ => unreachable!(),
                }
                out.push(vec![modify(&StmtPath::new(guard.path.child(BlockSel::Then), j), new)]);
            }
        }
    }
    out
}

fn drop_empty_guard(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for guard in empty_guards(p) {
        let StmtKind::If {
            else_block, cond, ..
        } = &guard.stmt.kind
        else {
            unreachable!()
        };
        if else_block.is_empty() {
            out.push(vec![Edit::Delete {
                path: guard.path.clone(),
            }]);
        } else {
            // With an else branch, the guard becomes unreachable instead.
            let mut new = guard.stmt.clone();
            if let (StmtKind::If { cond: c, .. }, Expr::Binary(_, l, r)) = (&mut new.kind, cond) {
                *c = Expr::binary(BinaryOp::Lt, (**l).clone(), (**r).clone());
            }
            out.push(vec![modify(&guard.path, new)]);
        }
    }
    out
}

fn other_brackets(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    let mentions = |s: &Stmt| contains_expr(s, &|e| str_lit(e, "(") || str_lit(e, ")"));
    let all: Vec<Site> = sites(p).into_iter().filter(|s| mentions(s.stmt)).collect();
    for (open, close) in [("[", "]"), ("{", "}"), ("<", ">")] {
        let swap = |s: &Stmt, both: bool| {
            rewrite_stmt(s, &mut |e| {
                if str_lit(e, "(") {
                    *e = Expr::Str(open.to_string());
                } else if both && str_lit(e, ")") {
                    *e = Expr::Str(close.to_string());
                }
            })
        };
        // Every bracket in the program consistently.
        let edits: Vec<Edit> = all
            .iter()
            .filter_map(|s| swap(s.stmt, true).map(|n| modify(&s.path, n)))
            .collect();
        if !edits.is_empty() {
            out.push(edits);
        }
        // Only the opening symbol, in each place it occurs.
        for s in &all {
            if let Some(n) = swap(s.stmt, false) {
                out.push(vec![modify(&s.path, n)]);
            }
        }
    }
    out
}

/// `if (v != 0) { ... }` outside any loop.
fn final_checks(p: &Program) -> Vec<Site<'_>> {
    sites(p)
        .into_iter()
        .filter(|s| s.loop_depth == 0)
        .filter(|s| {
            matches!(&s.stmt.kind, StmtKind::If { cond: Expr::Binary(BinaryOp::Ne, l, r), else_block, .. }
                if matches!(**l, Expr::Var(_)) && **r == Expr::Int(0) && else_block.is_empty())
        })
        .collect()
}

fn drop_final_check(p: &Program) -> Vec<Mutation> {
    final_checks(p)
        .into_iter()
        .map(|s| vec![Edit::Delete { path: s.path }])
        .collect()
}

fn weaken_final_check(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for s in final_checks(p) {
        let StmtKind::If {
            cond: Expr::Binary(_, l, r),
            ..
        } = &s.stmt.kind
        else {
            unreachable!()
        };
        let mut new = s.stmt.clone();
        if let StmtKind::If { cond, .. } = &mut new.kind {
            *cond = Expr::binary(BinaryOp::Lt, (**l).clone(), (**r).clone());
        }
        out.push(vec![modify(&s.path, new)]);
    }
    out
}

/// `if (a > b) { b = a; }`: returns (site, a, b).
fn max_updates(p: &Program) -> Vec<(Site<'_>, String, String)> {
    let mut out = Vec::new();
    for site in sites(p) {
        if let StmtKind::If {
            cond: Expr::Binary(BinaryOp::Gt, l, r),
            then_block,
            else_block,
        } = &site.stmt.kind
        {
            if let (Expr::Var(a), Expr::Var(b)) = (&**l, &**r) {
                let assigns = then_block.len() == 1
                    && else_block.is_empty()
                    && matches!(&then_block[0].kind, StmtKind::Assign { target: LValue::Var(t), op: AssignOp::Set, value: Expr::Var(v) } if t == b && v == a);
                if assigns {
                    let (a, b) = (a.clone(), b.clone());
                    out.push((site, a, b));
                }
            }
        }
    }
    out
}

fn count_instead_of_max(p: &Program) -> Vec<Mutation> {
    max_updates(p)
        .into_iter()
        .flat_map(|(site, _, b)| {
            [format!("{b} += 1;"), format!("{b} = {b} + 1;")]
                .into_iter()
                .map(move |src| vec![modify(&site.path, stmt(&src))])
                .collect::<Vec<_>>()
        })
        .collect()
}

fn nonzero_initial_max(p: &Program) -> Vec<Mutation> {
    let maxes: Vec<String> = max_updates(p).into_iter().map(|(_, _, b)| b).collect();
    let mut out = Vec::new();
    for site in sites(p) {
        if let StmtKind::Declare {
            name,
            ty,
            init: Some(Expr::Int(0)),
        } = &site.stmt.kind
        {
            if maxes.contains(name) {
                for v in [1, 2] {
                    let new = Stmt::new(StmtKind::Declare {
                        name: name.clone(),
                        ty: *ty,
                        init: Some(Expr::Int(v)),
                    });
                    out.push(vec![modify(&site.path, new)]);
                }
            }
        }
    }
    out
}

fn close_on_anything(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        let StmtKind::If {
            cond: Expr::Binary(BinaryOp::Eq, l, r),
            else_block,
            ..
        } = &site.stmt.kind
        else {
            continue;
        };
        if !else_block.is_empty() || !str_lit(r, ")") {
            continue;
        }
        let mut new = site.stmt.clone();
        if let StmtKind::If { cond, .. } = &mut new.kind {
            *cond = Expr::binary(BinaryOp::Ne, (**l).clone(), Expr::Str("(".into()));
        }
        out.push(vec![modify(&site.path, new)]);
    }
    out
}

// ---------------------------------------------------------------------------
// binary digits

fn drop_zero_guard(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (i, s) in p.body.iter().enumerate() {
        if let StmtKind::If {
            cond: Expr::Binary(BinaryOp::Eq, l, r),
            else_block,
            ..
        } = &s.kind
        {
            if matches!(**l, Expr::Var(_)) && **r == Expr::Int(0) && else_block.is_empty() {
                out.push(vec![Edit::Delete {
                    path: StmtPath::top(i),
                }]);
                let mut new = s.clone();
                if let StmtKind::If { cond, .. } = &mut new.kind {
                    *cond = Expr::binary(BinaryOp::Lt, (**l).clone(), Expr::Int(0));
                }
                out.push(vec![modify(&StmtPath::top(i), new)]);
            }
        }
    }
    out
}

fn is_base_op(e: &Expr) -> bool {
    matches!(e, Expr::Binary(BinaryOp::Mod | BinaryOp::Div, _, r) if **r == Expr::Int(2))
}

fn is_halving(s: &Stmt) -> bool {
    matches!(&s.kind, StmtKind::Assign { op: AssignOp::Div, value: Expr::Int(2), .. })
}

/// Switch every `% 2`, `/ 2` and `/= 2` to another base at once.
fn decimal_base(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for base in [10, 8, 16] {
        let mut edits = Vec::new();
        for site in sites(p) {
            if site.stmt.is_compound() {
                continue;
            }
            if is_halving(site.stmt) {
                let mut new = site.stmt.clone();
                if let StmtKind::Assign { value, .. } = &mut new.kind {
                    *value = Expr::Int(base);
                }
                edits.push(modify(&site.path, new));
                continue;
            }
            let new = rewrite_stmt(site.stmt, &mut |e| {
                if is_base_op(e) {
                    if let Expr::Binary(_, _, r) = e {
                        **r = Expr::Int(base);
                    }
                }
            });
            if let Some(new) = new {
                edits.push(modify(&site.path, new));
            }
        }
        if !edits.is_empty() {
            out.push(edits);
        }
    }
    out
}

fn wrong_shift(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        let StmtKind::Assign {
            target: LValue::Var(v),
            ..
        } = &site.stmt.kind
        else {
            continue;
        };
        let halves = is_halving(site.stmt)
            || matches!(&site.stmt.kind, StmtKind::Assign { op: AssignOp::Set, value: Expr::Binary(BinaryOp::Div, l, r), .. }
                if **l == Expr::Var(v.clone()) && **r == Expr::Int(2));
        if !halves {
            continue;
        }
        for src in [
            format!("{v} = {v} / 4;"),
            format!("{v} = {v} - 2;"),
            format!("{v} = {v} / 2 - 1;"),
            format!("{v} /= 3;"),
        ] {
            out.push(vec![modify(&site.path, stmt(&src))]);
        }
    }
    out
}

/// `string r = "";` whose variable is later built by prepending or
/// appending: declare it as an integer instead.
fn numeric_accumulator(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (i, s) in p.body.iter().enumerate() {
        if let StmtKind::Declare {
            name,
            ty: crate::minilang::Type::Str,
            init: Some(e),
        } = &s.kind
        {
            if !str_lit(e, "") {
                continue;
            }
            let mut built = false;
            p.walk(&mut |x| {
                if let StmtKind::Assign {
                    target: LValue::Var(t),
                    value: Expr::Binary(BinaryOp::Add, _, _),
                    ..
                } = &x.kind
                {
                    built |= t == name;
                }
            });
            if built {
                out.push(vec![modify(&StmtPath::top(i), stmt(&format!("int {name} = 0;")))]);
            }
        }
    }
    out
}

fn early_stop(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        let StmtKind::While {
            cond: Expr::Binary(op @ (BinaryOp::Gt | BinaryOp::Ne), l, r),
            ..
        } = &site.stmt.kind
        else {
            continue;
        };
        if **r != Expr::Int(0) || !matches!(**l, Expr::Var(_)) {
            continue;
        }
        let _ = op;
        for (nop, k) in [(BinaryOp::Gt, 1), (BinaryOp::Ge, 2)] {
            let mut new = site.stmt.clone();
            if let StmtKind::While { cond, .. } = &mut new.kind {
                *cond = Expr::binary(nop, (**l).clone(), Expr::Int(k));
            }
            out.push(vec![modify(&site.path, new)]);
        }
    }
    out
}

/// Reverse loop `for (int k = len(a) - 1; ...)` starting one slot lower.
fn skip_top_bit(p: &Program) -> Vec<Mutation> {
    let mut out = Vec::new();
    for site in sites(p) {
        let StmtKind::For { init, .. } = &site.stmt.kind else {
            continue;
        };
        if let StmtKind::Declare {
            init: Some(Expr::Binary(BinaryOp::Sub, l, r)),
            ..
        } = &init.kind
        {
            if matches!(**l, Expr::Len(_)) && **r == Expr::Int(1) {
                let new = rewrite_stmt(site.stmt, &mut |e| {
                    if let Expr::Binary(BinaryOp::Sub, l, r) = e {
                        if matches!(**l, Expr::Len(_)) && **r == Expr::Int(1) {
                            **r = Expr::Int(2);
                        }
                    }
                })
                .expect("bound rewritten");
                out.push(vec![modify(&site.path, new)]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{check, parse, print_program};
    use crate::synth::tasks::load_task;

    #[test]
    fn every_class_has_mutations_and_mutants_fail() {
        for id in TaskId::ALL {
            let task = load_task(id);
            for (ci, class) in task.classes.iter().enumerate() {
                let mut total = 0;
                let mut failing = 0;
                for (ri, r) in task.references.iter().enumerate() {
                    for m in mutators_for_class(&task, ci) {
                        for mutation in m.applicable(r) {
                            let q = edit::apply(r, &mutation).unwrap();
                            check(&q).unwrap_or_else(|e| panic!("{} on ref {ri}: {e}", m.id));
                            let text = print_program(&q);
                            assert_eq!(parse(&text).unwrap(), q);
                            total += 1;
                            if !task.passes(&q) {
                                failing += 1;
                            } else {
                                eprintln!("{id} {} ref {ri} passes:\n{text}", m.id);
                            }
                        }
                    }
                }
                eprintln!("{id} {}: {failing}/{total}", class.name);
                assert!(failing > 0, "{id} {} has no failing mutant", class.name);
            }
        }
    }
}
