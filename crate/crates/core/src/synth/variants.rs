//! Behavior-preserving source rewrites that give one program many surface
//! forms: renaming, mirrored comparisons, loop-form changes and the like.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::minilang::ast::*;
use crate::minilang::{check, parse, print_program, run, ExecOptions, Program, Type, Value, Verdict};

const NAMES: &[&str] = &[
    "a", "b", "c", "d", "e", "g", "h", "i", "j", "k", "m", "n", "p", "q", "r", "t", "u", "w", "x", "y", "z",
    "acc", "aux", "best", "bit", "bits", "buf", "ch", "col", "cnt", "count", "cur", "curr", "deep", "depth",
    "digit", "digits", "done", "flag", "good", "idx", "index", "k2", "left", "level", "line", "lvl", "maxd",
    "num", "ok", "open", "out", "pos", "rem", "res", "result", "row", "rows", "s2", "step", "str", "sym",
    "temp", "text", "tmp", "total", "val", "valid", "value", "var1", "x1", "y1",
];

/// Probability that each individual rewrite site is taken.
const SITE_PROB: f64 = 0.5;

fn declared_types(p: &Program) -> HashMap<String, Type> {
    let mut out: HashMap<String, Type> = p.params.iter().map(|q| (q.name.clone(), q.ty)).collect();
    p.walk(&mut |s| match &s.kind {
        StmtKind::Declare { name, ty, .. } | StmtKind::ForEach { name, ty, .. } => {
            out.insert(name.clone(), *ty);
        }
        _ => {}
    });
    out
}

fn is_int(e: &Expr, types: &HashMap<String, Type>) -> bool {
    match e {
        Expr::Int(_) | Expr::Len(_) => true,
        Expr::Var(v) => types.get(v) == Some(&Type::Int),
        Expr::Index(a, _) => matches!(&**a, Expr::Var(v) if types.get(v) == Some(&Type::IntArray)),
        Expr::Unary(UnaryOp::Neg, _) => true,
        Expr::Binary(BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod, _, _) => true,
        Expr::Binary(BinaryOp::Add, a, b) => is_int(a, types) && is_int(b, types),
        _ => false,
    }
}

/// Logical negation, pushing through comparisons and double negation.
pub fn negate(e: &Expr) -> Expr {
    let flipped = |op| match op {
        BinaryOp::Lt => Some(BinaryOp::Ge),
        BinaryOp::Ge => Some(BinaryOp::Lt),
        BinaryOp::Gt => Some(BinaryOp::Le),
        BinaryOp::Le => Some(BinaryOp::Gt),
        BinaryOp::Eq => Some(BinaryOp::Ne),
        BinaryOp::Ne => Some(BinaryOp::Eq),
        _ => None,
    };
    match e {
        Expr::Unary(UnaryOp::Not, inner) => (**inner).clone(),
        Expr::Binary(op, a, b) => match flipped(*op) {
            Some(f) => Expr::Binary(f, a.clone(), b.clone()),
            None => Expr::Unary(UnaryOp::Not, Box::new(e.clone())),
        },
        _ => Expr::Unary(UnaryOp::Not, Box::new(e.clone())),
    }
}

fn all_exprs(p: &mut Program, f: &mut dyn FnMut(&mut Expr)) {
    p.walk_mut(&mut |s| {
        for e in s.exprs_mut() {
            e.rewrite(f);
        }
    });
}

/// `a < b` ↔ `b > a`, `a == b` ↔ `b == a`.
fn mirror_comparisons<R: Rng>(p: &mut Program, rng: &mut R) {
    all_exprs(p, &mut |e| {
        if let Expr::Binary(op, a, b) = e {
            let m = match op {
                BinaryOp::Lt => BinaryOp::Gt,
                BinaryOp::Gt => BinaryOp::Lt,
                BinaryOp::Le => BinaryOp::Ge,
                BinaryOp::Ge => BinaryOp::Le,
                BinaryOp::Eq => BinaryOp::Eq,
                BinaryOp::Ne => BinaryOp::Ne,
                _ => return,
            };
            if rng.gen_bool(SITE_PROB) {
                *e = Expr::Binary(m, b.clone(), a.clone());
            }
        }
    });
}

/// `e < k` ↔ `e <= k - 1` and the like, for integer literals `k`.
fn swap_bound_strictness<R: Rng>(p: &mut Program, rng: &mut R) {
    all_exprs(p, &mut |e| {
        if let Expr::Binary(op, a, b) = e {
            let Expr::Int(k) = **b else { return };
            let (nop, nk) = match op {
                BinaryOp::Lt => (BinaryOp::Le, k.checked_sub(1)),
                BinaryOp::Le => (BinaryOp::Lt, k.checked_add(1)),
                BinaryOp::Gt => (BinaryOp::Ge, k.checked_add(1)),
                BinaryOp::Ge => (BinaryOp::Gt, k.checked_sub(1)),
                _ => return,
            };
            // Keep -inf out of reach: it is its own literal.
            if let Some(nk) = nk.filter(|v| *v != i64::MIN && k != i64::MIN) {
                if rng.gen_bool(SITE_PROB) {
                    *e = Expr::Binary(nop, a.clone(), Box::new(Expr::Int(nk)));
                }
            }
        }
    });
}

/// `x += e` ↔ `x = x + e`.
fn toggle_compound_assign<R: Rng>(p: &mut Program, rng: &mut R) {
    p.walk_mut(&mut |s| {
        let StmtKind::Assign {
            target: LValue::Var(x),
            op,
            value,
        } = &mut s.kind
        else {
            return;
        };
        if !rng.gen_bool(SITE_PROB) {
            return;
        }
        if let Some(bin) = op.binary() {
            *value = Expr::binary(bin, Expr::Var(x.clone()), value.clone());
            *op = AssignOp::Set;
        } else if let Expr::Binary(bin, l, r) = value {
            let compound = [
                AssignOp::Add,
                AssignOp::Sub,
                AssignOp::Mul,
                AssignOp::Div,
            ]
            .into_iter()
            .find(|a| a.binary() == Some(*bin));
            if let (Some(c), Expr::Var(v)) = (compound, &**l) {
                if v == x {
                    let r = (**r).clone();
                    *op = c;
                    *value = r;
                }
            }
        }
    });
}

/// `a + b` → `b + a` (and `*`) when both sides are integers.
fn commute_arithmetic<R: Rng>(p: &mut Program, rng: &mut R) {
    let types = declared_types(p);
    all_exprs(p, &mut |e| {
        if let Expr::Binary(op @ (BinaryOp::Add | BinaryOp::Mul), a, b) = e {
            if is_int(a, &types) && is_int(b, &types) && rng.gen_bool(SITE_PROB) {
                *e = Expr::Binary(*op, b.clone(), a.clone());
            }
        }
    });
}

fn each_block(block: &mut Vec<Stmt>, f: &mut dyn FnMut(&mut Vec<Stmt>)) {
    for s in block.iter_mut() {
        match &mut s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                each_block(then_block, f);
                each_block(else_block, f);
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::ForEach { body, .. } => {
                each_block(body, f)
            }
            _ => {}
        }
    }
    f(block);
}

/// `if (c) {A} else {B}` → `if (!c) {B} else {A}`.
fn swap_branches<R: Rng>(p: &mut Program, rng: &mut R) {
    p.walk_mut(&mut |s| {
        if let StmtKind::If {
            cond,
            then_block,
            else_block,
        } = &mut s.kind
        {
            if !else_block.is_empty() && rng.gen_bool(SITE_PROB) {
                *cond = negate(cond);
                std::mem::swap(then_block, else_block);
            }
        }
    });
}

/// `for (init; c; u) {B}` → `init; while (c) {B u;}`.
fn for_to_while<R: Rng>(p: &mut Program, rng: &mut R) {
    each_block(&mut p.body, &mut |block| {
        let mut i = 0;
        while i < block.len() {
            if matches!(block[i].kind, StmtKind::For { .. }) && rng.gen_bool(SITE_PROB) {
                let StmtKind::For {
                    init,
                    cond,
                    update,
                    mut body,
                } = block[i].kind.clone()
                else {
                    unreachable!()
                };
                body.push(*update);
                block[i] = Stmt::new(StmtKind::While { cond, body });
                block.insert(i, *init);
                i += 1;
            }
            i += 1;
        }
    });
}

fn mentions(s: &Stmt, var: &str) -> bool {
    let mut hit = false;
    s.walk(&mut |x| {
        hit |= x.written_variable() == Some(var);
        if let StmtKind::Declare { name, .. } | StmtKind::ForEach { name, .. } = &x.kind {
            hit |= name == var;
        }
        for e in x.exprs() {
            hit |= e.variables().iter().any(|v| v == var);
        }
    });
    hit
}

/// `int v = e; while (c) {B v = ...;}` → `for (int v = e; c; v = ...) {B}`
/// when `v` is not used after the loop.
fn while_to_for<R: Rng>(p: &mut Program, rng: &mut R) {
    each_block(&mut p.body, &mut |block| {
        let mut i = 1;
        while i < block.len() {
            let ok = match (&block[i - 1].kind, &block[i].kind) {
                (StmtKind::Declare { name, init: Some(_), .. }, StmtKind::While { body, .. }) => {
                    matches!(body.last().map(|s| &s.kind), Some(StmtKind::Assign { target: LValue::Var(t), .. }) if t == name)
                        && !block[i + 1..].iter().any(|s| mentions(s, name))
                }
                _ => false,
            };
            if ok && rng.gen_bool(SITE_PROB) {
                let init = block.remove(i - 1);
                let StmtKind::While { cond, mut body } = block[i - 1].kind.clone() else {
                    unreachable!()
                };
                let update = body.pop().expect("checked non-empty");
                block[i - 1] = Stmt::new(StmtKind::For {
                    init: Box::new(init),
                    cond,
                    update: Box::new(update),
                    body,
                });
            } else {
                i += 1;
            }
        }
    });
}

/// `k` → `a + b`, `a * b` or `a - b` for integer literals `k >= 2`.
fn split_constants<R: Rng>(p: &mut Program, rng: &mut R) {
    all_exprs(p, &mut |e| {
        let Expr::Int(k) = *e else { return };
        if !(2..=1000).contains(&k) || !rng.gen_bool(0.3) {
            return;
        }
        let divisors: Vec<i64> = (2..k).filter(|d| k % d == 0).collect();
        let (op, a, b) = match rng.gen_range(0..3) {
            0 if !divisors.is_empty() => {
                let d = *divisors.choose(rng).expect("non-empty");
                (BinaryOp::Mul, d, k / d)
            }
            1 => {
                let extra = rng.gen_range(1..=3);
                (BinaryOp::Sub, k + extra, extra)
            }
            _ => {
                let a = rng.gen_range(1..k);
                (BinaryOp::Add, a, k - a)
            }
        };
        *e = Expr::binary(op, Expr::Int(a), Expr::Int(b));
    });
}

fn fresh_name<R: Rng>(p: &Program, rng: &mut R) -> Option<String> {
    let used: BTreeSet<String> = declared_types(p).into_keys().collect();
    let free: Vec<&&str> = NAMES.iter().filter(|n| !used.contains(**n)).collect();
    free.choose(rng).map(|n| n.to_string())
}

fn string_literals(p: &Program) -> Vec<String> {
    let mut out = BTreeSet::new();
    p.walk(&mut |s| {
        for e in s.exprs() {
            e.visit(&mut |x| {
                if let Expr::Str(v) = x {
                    out.insert(v.clone());
                }
            });
        }
    });
    out.into_iter().collect()
}

/// Leftover code that never reaches the output: an unused variable
/// declared somewhere in the body, or an unused counter bumped inside one
/// of the loops.
fn dead_code<R: Rng>(p: &mut Program, rng: &mut R) {
    let Some(name) = fresh_name(p, rng) else { return };
    let decl = |ty, init| {
        Stmt::new(StmtKind::Declare {
            name: name.clone(),
            ty,
            init: Some(init),
        })
    };
    let mut loops = 0;
    p.walk(&mut |s| {
        loops += usize::from(matches!(
            s.kind,
            StmtKind::While { .. } | StmtKind::For { .. } | StmtKind::ForEach { .. }
        ));
    });
    if loops > 0 && rng.gen_bool(0.5) {
        let bump = if rng.gen_bool(0.5) {
            AssignOp::Add
        } else {
            AssignOp::Sub
        };
        let step = Stmt::new(StmtKind::Assign {
            target: LValue::Var(name.clone()),
            op: bump,
            value: Expr::Int(rng.gen_range(1..=2)),
        });
        let target = rng.gen_range(0..loops);
        let mut seen = 0;
        let mut step = Some(step);
        p.walk_mut(&mut |s| {
            if let StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::ForEach { body, .. } = &mut s.kind {
                if seen == target {
                    if let Some(st) = step.take() {
                        let at = rng.gen_range(0..=body.len());
                        body.insert(at, st);
                    }
                }
                seen += 1;
            }
        });
        p.body.insert(0, decl(Type::Int, Expr::Int(rng.gen_range(0..3))));
        return;
    }
    let lits = string_literals(p);
    let s = match rng.gen_range(0..3) {
        0 => decl(Type::Int, Expr::Int(rng.gen_range(0..10))),
        1 => decl(Type::Bool, Expr::Bool(rng.gen_bool(0.5))),
        _ => decl(Type::Str, Expr::Str(lits.choose(rng).cloned().unwrap_or_default())),
    };
    let at = rng.gen_range(0..=p.body.len());
    p.body.insert(at, s);
}

/// Swap adjacent top-level declarations that do not read each other.
fn reorder_declarations<R: Rng>(p: &mut Program, rng: &mut R) {
    for i in 1..p.body.len() {
        let (StmtKind::Declare { name: first, .. }, StmtKind::Declare { init, .. }) =
            (&p.body[i - 1].kind, &p.body[i].kind)
        else {
            continue;
        };
        let reads = init.as_ref().is_some_and(|e| e.variables().contains(first));
        if !reads && rng.gen_bool(SITE_PROB) {
            p.body.swap(i - 1, i);
        }
    }
}

fn rename_in_expr(e: &mut Expr, map: &HashMap<String, String>) {
    e.rewrite(&mut |x| {
        if let Expr::Var(v) = x {
            if let Some(n) = map.get(v) {
                *v = n.clone();
            }
        }
    });
}

/// Consistently rename a random subset of variables and parameters.
pub fn rename<R: Rng>(p: &mut Program, rng: &mut R) {
    let mut vars: Vec<String> = p.params.iter().map(|q| q.name.clone()).collect();
    p.walk(&mut |s| {
        if let StmtKind::Declare { name, .. } | StmtKind::ForEach { name, .. } = &s.kind {
            if !vars.contains(name) {
                vars.push(name.clone());
            }
        }
    });
    let (renamed, kept): (Vec<String>, Vec<String>) = vars.into_iter().partition(|_| rng.gen_bool(0.7));
    let mut taken: BTreeSet<String> = kept.into_iter().collect();
    let mut map = HashMap::new();
    for v in renamed {
        let free: Vec<&&str> = NAMES.iter().filter(|n| !taken.contains(**n)).collect();
        let Some(new) = free.choose(rng) else { break };
        taken.insert(new.to_string());
        map.insert(v, new.to_string());
    }
    let fix = |n: &mut String| {
        if let Some(m) = map.get(n) {
            *n = m.clone();
        }
    };
    for q in &mut p.params {
        fix(&mut q.name);
    }
    p.walk_mut(&mut |s| {
        match &mut s.kind {
            StmtKind::Declare { name, .. } | StmtKind::ForEach { name, .. } => fix(name),
            StmtKind::Assign { target, .. } => match target {
                LValue::Var(n) | LValue::Index(n, _) => fix(n),
            },
            _ => {}
        }
        for e in s.exprs_mut() {
            rename_in_expr(e, &map);
        }
    });
}

/// One random combination of all rewrites, applied in a random order.
pub fn transform<R: Rng>(p: &Program, rng: &mut R) -> Program {
    type Rewrite<R> = fn(&mut Program, &mut R);
    let mut steps: Vec<Rewrite<R>> = vec![
        mirror_comparisons,
        swap_bound_strictness,
        toggle_compound_assign,
        commute_arithmetic,
        swap_branches,
        for_to_while,
        while_to_for,
        split_constants,
        reorder_declarations,
    ];
    steps.shuffle(rng);
    let mut q = p.clone();
    for step in steps {
        if rng.gen_bool(0.6) {
            step(&mut q, rng);
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        dead_code(&mut q, rng);
    }
    rename(&mut q, rng);
    q.renumber();
    q
}

fn behavior(p: &Program, inputs: &[Vec<Value>]) -> Vec<(std::mem::Discriminant<Verdict>, String)> {
    inputs
        .iter()
        .map(|i| {
            let ex = run(p, i, &ExecOptions::default());
            (std::mem::discriminant(&ex.verdict), ex.output)
        })
        .collect()
}

/// A random surface variant of `p` that checks, round-trips through the
/// printer, and behaves like `p` (same verdict kinds and outputs) on
/// `inputs`. Falls back to `p` itself if no attempt qualifies.
pub fn vary<R: Rng>(p: &Program, inputs: &[Vec<Value>], rng: &mut R) -> Program {
    let want = behavior(p, inputs);
    for _ in 0..5 {
        let q = transform(p, rng);
        let text = print_program(&q);
        let reparsed = parse(&text).ok();
        if check(&q).is_ok() && reparsed.as_ref() == Some(&q) && behavior(&q, inputs) == want {
            return q;
        }
    }
    p.clone()
}
