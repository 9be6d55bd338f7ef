use std::collections::BTreeSet;

use dpe::dependency::analyze;
use dpe::minilang::{evaluate_write, parse, run, ExecOptions, Program, Stmt, StmtKind, Value};
use dpe::programs;

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn find_stmt<'a>(p: &'a Program, text: &str) -> &'a Stmt {
    let mut found = None;
    p.walk(&mut |s| {
        if dpe::minilang::printer::header(s) == text {
            found = Some(s);
        }
    });
    found.unwrap_or_else(|| panic!("no statement `{text}`"))
}

#[test]
fn max_assignment_dependencies() {
    let p = programs::load(programs::MAX);
    let s = find_stmt(&p, "max_val = item;");
    let d = analyze(&p);
    let deps = d.get(s.id).unwrap();
    assert_eq!(deps.data, set(&["item"]));
    assert_eq!(deps.control, set(&["item", "max_val"]));
}

/// Independent guard collector: recursively descend to the target statement,
/// gathering every variable mentioned by each enclosing header.
fn guard_vars(stmts: &[Stmt], target: u32, acc: &mut Vec<String>) -> bool {
    for s in stmts {
        if s.id == target {
            return true;
        }
        let mut header = Vec::new();
        match &s.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => header.extend(cond.variables()),
            StmtKind::For { cond, update, init, .. } => {
                if init.id == target {
                    return true;
                }
                header.extend(cond.variables());
                if let StmtKind::Assign { target: t, .. } = &update.kind {
                    header.push(t.name().to_string());
                }
                if update.id == target {
                    acc.extend(header);
                    return true;
                }
            }
            StmtKind::ForEach { name, iter, .. } => {
                header.extend(iter.variables());
                header.push(name.clone());
            }
            _ => {}
        }
        for (_, b) in s.blocks() {
            let mut inner = Vec::new();
            if guard_vars(b, target, &mut inner) {
                acc.extend(header);
                acc.extend(inner);
                return true;
            }
        }
    }
    false
}

#[test]
fn sorting_store_dependencies() {
    for src in [programs::BUBBLE, programs::INSERTION] {
        let p = programs::load(src);
        let s = find_stmt(&p, "A[j] = A[j + 1];");
        let deps = analyze(&p).get(s.id).cloned().unwrap();
        assert_eq!(deps.data, set(&["A", "j"]));
        assert_eq!(deps.control, set(&["A", "i", "j"]));

        let mut oracle = Vec::new();
        assert!(guard_vars(&p.body, s.id, &mut oracle));
        assert_eq!(deps.control, oracle.into_iter().collect());
    }
}

#[test]
fn control_deps_match_oracle_everywhere() {
    for src in programs::all_sources() {
        let p = parse(src).unwrap();
        let ro: BTreeSet<String> = p.readonly_params().into_iter().collect();
        let d = analyze(&p);
        for (id, deps) in &d.stmts {
            let mut oracle = Vec::new();
            assert!(guard_vars(&p.body, *id, &mut oracle));
            let oracle: BTreeSet<String> = oracle.into_iter().filter(|v| !ro.contains(v)).collect();
            assert_eq!(deps.control, oracle, "{} stmt {id}", p.name);
        }
    }
}

#[test]
fn sibling_order_does_not_change_control_deps() {
    let a = parse("fn f(int n) { int x = 0; int y = 0; if (n > 0) { x = 1; y = 2; } }").unwrap();
    let b = parse("fn f(int n) { int x = 0; int y = 0; if (n > 0) { y = 2; x = 1; } }").unwrap();
    let (da, db) = (analyze(&a), analyze(&b));
    assert_eq!(da.get(3).unwrap().control, db.get(4).unwrap().control);
    assert_eq!(da.get(4).unwrap().control, db.get(3).unwrap().control);
}

fn perturbations(v: &Value) -> Vec<Value> {
    match v {
        Value::Int(x) => vec![Value::Int(x.wrapping_add(1)), Value::Int(x.wrapping_sub(1)), Value::Int(0)],
        Value::Bool(b) => vec![Value::Bool(!b)],
        Value::Str(s) => vec![Value::Str(format!("{s}x")), Value::Str(String::new())],
        Value::IntArray(xs) => {
            let mut out = vec![Value::IntArray(Vec::new())];
            let mut longer = xs.clone();
            longer.push(7);
            out.push(Value::IntArray(longer));
            for i in 0..xs.len() {
                let mut ys = xs.clone();
                ys[i] = ys[i].wrapping_add(1);
                out.push(Value::IntArray(ys));
            }
            out
        }
        Value::Bottom => vec![],
    }
}

/// Perturb each variable not in the statement's dependency set in the state
/// just before a write; the written value must not change.
fn check_soundness(p: &Program, inputs: &[Value]) -> usize {
    let deps = analyze(p);
    let opts = ExecOptions {
        record_snapshots: true,
        ..ExecOptions::default()
    };
    let ex = run(p, inputs, &opts);
    let mut checked = 0;
    for (event, env) in ex.events.iter().zip(&ex.snapshots) {
        let stmt = p.find(event.stmt_id).unwrap();
        if matches!(stmt.kind, StmtKind::ForEach { .. }) {
            continue;
        }
        let allowed = {
            let mut s = deps.get(stmt.id).unwrap().all();
            s.insert(event.var.clone());
            s
        };
        let base = evaluate_write(stmt, env).unwrap().map(|(_, v)| v);
        assert_eq!(base.as_ref(), Some(&event.value));
        for (i, b) in env.bindings.iter().enumerate() {
            if allowed.contains(&b.name) || b.readonly {
                continue;
            }
            for alt in perturbations(&b.value) {
                let mut env2 = env.clone();
                env2.bindings[i].value = alt;
                let got = evaluate_write(stmt, &env2).map(|w| w.map(|(_, v)| v));
                assert_eq!(got, Ok(base.clone()), "{}: perturbing {} changed stmt {}", p.name, b.name, stmt.id);
                checked += 1;
            }
        }
    }
    checked
}

#[test]
fn perturbation_soundness_on_bundled_programs() {
    let mut checked = 0;
    for (src, inputs) in programs::all_with_inputs() {
        let p = parse(src).unwrap();
        for input in inputs {
            checked += check_soundness(&p, &input);
        }
    }
    assert!(checked > 100);
}

#[test]
fn perturbation_soundness_small_program() {
    let p = parse("fn f(int a) { int b = a * 2; int c = 0; if (b > 3) { c = b - a; } a += c; }").unwrap();
    for a in -3..5 {
        check_soundness(&p, &[Value::Int(a)]);
    }
}
