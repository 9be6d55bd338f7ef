use dpe::minilang::{
    self, parse, print_program, run, ExecOptions, ParseError, StmtKind, Value, Verdict,
};
use dpe::programs;
use proptest::prelude::*;

fn arr(xs: &[i64]) -> Value {
    Value::IntArray(xs.to_vec())
}

fn a_column(source: &str) -> Vec<Vec<i64>> {
    let p = programs::load(source);
    let ex = run(&p, &[arr(&[8, 5, 1, 4, 3])], &ExecOptions::default());
    assert_eq!(ex.verdict, Verdict::Completed);
    ex.events
        .iter()
        .filter(|e| e.var == "A")
        .map(|e| match &e.value {
            Value::IntArray(xs) => xs.clone(),
            other => panic!("A holds {other:?}"),
        })
        .collect()
}

// Successive values of A while sorting [8, 5, 1, 4, 3].
const LEFT: [[i64; 5]; 16] = [
    [5, 5, 1, 4, 3],
    [5, 8, 1, 4, 3],
    [5, 1, 1, 4, 3],
    [5, 1, 8, 4, 3],
    [1, 1, 8, 4, 3],
    [1, 5, 8, 4, 3],
    [1, 5, 4, 4, 3],
    [1, 5, 4, 8, 3],
    [1, 4, 4, 8, 3],
    [1, 4, 5, 8, 3],
    [1, 4, 5, 3, 3],
    [1, 4, 5, 3, 8],
    [1, 4, 3, 3, 8],
    [1, 4, 3, 5, 8],
    [1, 3, 3, 5, 8],
    [1, 3, 4, 5, 8],
];
const RIGHT: [[i64; 5]; 16] = [
    [5, 5, 1, 4, 3],
    [5, 8, 1, 4, 3],
    [5, 1, 1, 4, 3],
    [5, 1, 8, 4, 3],
    [5, 1, 4, 4, 3],
    [5, 1, 4, 8, 3],
    [5, 1, 4, 3, 3],
    [5, 1, 4, 3, 8],
    [1, 1, 4, 3, 8],
    [1, 5, 4, 3, 8],
    [1, 4, 4, 3, 8],
    [1, 4, 5, 3, 8],
    [1, 4, 3, 3, 8],
    [1, 4, 3, 5, 8],
    [1, 3, 3, 5, 8],
    [1, 3, 4, 5, 8],
];

#[test]
fn sorting_traces_match_expected_columns() {
    let left = a_column(programs::BUBBLE);
    let right = a_column(programs::INSERTION);
    assert_eq!(left, LEFT.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    assert_eq!(right, RIGHT.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    assert_eq!(left[4], vec![1, 1, 8, 4, 3]);
    assert_eq!(right[4], vec![5, 1, 4, 4, 3]);
    assert_eq!(left[..4], right[..4]);
}

#[test]
fn max_trace_events() {
    let p = programs::load(programs::MAX);
    let ex = run(&p, &[arr(&[1, 5, 3])], &ExecOptions::default());
    assert_eq!(ex.verdict, Verdict::Completed);
    assert_eq!(ex.return_value, Some(Value::Int(5)));
    let seq: Vec<(String, String)> = ex
        .events
        .iter()
        .map(|e| (e.var.clone(), e.value.token().unwrap()))
        .collect();
    let expected = [
        ("max_val", "-inf"),
        ("item", "1"),
        ("max_val", "1"),
        ("item", "5"),
        ("max_val", "5"),
        ("item", "3"),
    ];
    assert_eq!(
        seq,
        expected
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect::<Vec<_>>()
    );
    // The read-only input never shows up.
    assert!(ex.events.iter().all(|e| e.var != "arr"));
}

#[test]
fn sorting_program_shape() {
    let p = programs::load(programs::BUBBLE);
    assert_eq!(p.body.len(), 1);
    let StmtKind::For { body, .. } = &p.body[0].kind else {
        panic!("outer statement is not a for loop");
    };
    let StmtKind::For { body: inner, .. } = &body[0].kind else {
        panic!("inner statement is not a for loop");
    };
    assert!(matches!(inner[0].kind, StmtKind::If { .. }));
}

#[test]
fn empty_body_round_trip() {
    let p = parse("fn f() { }").unwrap();
    assert!(p.body.is_empty());
    assert_eq!(print_program(&p), "fn f() {\n}\n");
}

#[test]
fn undeclared_variable_rejected() {
    assert!(matches!(
        parse("fn f() {\n    x = 1;\n}"),
        Err(ParseError::UndeclaredVariable { ref name, line: 2, .. }) if name == "x"
    ));
    assert!(matches!(
        parse("fn f() { if (true) { int y = 1; } y = 2; }"),
        Err(ParseError::UndeclaredVariable { .. })
    ));
}

#[test]
fn readonly_write_rejected() {
    assert!(matches!(
        parse("fn f(readonly int[] a) { a[0] = 1; }"),
        Err(ParseError::ReadOnlyWrite { .. })
    ));
}

#[test]
fn syntax_error_has_location() {
    match parse("fn f() {\n    int x = ;\n}") {
        Err(ParseError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 13)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn infinite_loop_exhausts_budget() {
    let p = parse("fn f() { while (true) { } }").unwrap();
    let ex = run(&p, &[], &ExecOptions::with_budget(10_000));
    assert_eq!(ex.verdict, Verdict::BudgetExceeded);
    assert_eq!(ex.steps, 10_001);
}

#[test]
fn runtime_errors() {
    let cases = [
        "fn f() { int x = 1 / 0; }",
        "fn f() { int[] a = [1]; int x = a[3]; }",
        "fn f() { int x; int y = x + 1; }",
        "fn f() { int x = 9223372036854775807; x += 1; }",
        "fn f() { int x = \"s\" == 1; }",
    ];
    for src in cases {
        let p = parse(src).unwrap();
        let ex = run(&p, &[], &ExecOptions::default());
        assert!(
            matches!(ex.verdict, Verdict::RuntimeError { .. }),
            "{src} gave {:?}",
            ex.verdict
        );
    }
}

#[test]
fn printing_and_strings() {
    let src = r#"fn f(int n) {
    string s = "a\"b";
    s = s + n;
    print(s);
    print();
    print(s[1] + len(s));
}"#;
    let p = parse(src).unwrap();
    let ex = run(&p, &[Value::Int(7)], &ExecOptions::default());
    assert_eq!(ex.verdict, Verdict::Completed);
    assert_eq!(ex.output, "a\"b7\n\n\"4\n");
}

#[test]
fn straightline_stmt_ids_follow_body_order() {
    let src = "fn f() { int a = 1; print(a); int b = a + 1; a = b * 2; int c; c = 3; }";
    let p = parse(src).unwrap();
    let ex = run(&p, &[], &ExecOptions::default());
    let ids: Vec<u32> = ex.events.iter().map(|e| e.stmt_id).collect();
    // Skip the print (id 1) and the uninitialized declaration (id 4).
    assert_eq!(ids, vec![0, 2, 3, 5]);
    assert!(ex.events.iter().enumerate().all(|(i, e)| e.seq == i));
}

#[test]
fn canonical_print_is_a_fixed_point() {
    for src in [programs::BUBBLE, programs::INSERTION, programs::MAX] {
        let p = parse(src).unwrap();
        let text = print_program(&p);
        let q = parse(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(print_program(&q), text);
        assert_eq!(minilang::canonicalize(&text).unwrap(), text);
    }
    let max = print_program(&parse(programs::MAX).unwrap());
    assert_eq!(max.lines().count(), 9);
}

#[test]
fn else_if_and_negation_round_trip() {
    let src = "fn f(int x) { int y = -(3) + -x * -2; if (x > 0) { y = 1; } else if (!(x == 0)) { y = -inf; } else { y -= 1 - (2 - 3); } }";
    let p = parse(src).unwrap();
    let text = print_program(&p);
    assert_eq!(parse(&text).unwrap(), p);
    assert!(text.contains("y -= 1 - (2 - 3);"));
    assert!(text.contains("-(3) + -x * -2"));
    assert!(text.contains("y = -inf;"));
}

fn replay_matches_snapshots(src: &str, inputs: Vec<Value>) {
    let p = parse(src).unwrap();
    let opts = ExecOptions {
        record_snapshots: true,
        ..ExecOptions::default()
    };
    let ex = run(&p, &inputs, &opts);
    let again = run(&p, &inputs, &opts);
    assert_eq!(ex.events, again.events);
    assert_eq!(ex.output, again.output);

    // Replaying events in order must agree with every value the interpreter
    // later reads back from its environment.
    let mut replay: std::collections::BTreeMap<String, Value> = Default::default();
    for (i, e) in ex.events.iter().enumerate() {
        assert!(!e.value.is_bottom());
        if i > 0 {
            for b in &ex.snapshots[i].bindings {
                if let Some(v) = replay.get(&b.name) {
                    if !b.readonly && !b.value.is_bottom() && ex.snapshots[i].get(&b.name) == Some(b) {
                        assert_eq!(&b.value, v, "variable {} before event {i}", b.name);
                    }
                }
            }
        }
        replay.insert(e.var.clone(), e.value.clone());
    }
}

proptest! {
    #[test]
    fn sorting_programs_sort_and_replay(xs in proptest::collection::vec(-50i64..50, 0..8)) {
        for src in [programs::BUBBLE, programs::INSERTION] {
            let p = parse(src).unwrap();
            let ex = run(&p, &[arr(&xs)], &ExecOptions::default());
            prop_assert_eq!(&ex.verdict, &Verdict::Completed);
            let mut sorted = xs.clone();
            sorted.sort();
            let last = ex.events.iter().rev().find(|e| e.var == "A").map(|e| e.value.clone());
            if let Some(v) = last {
                prop_assert_eq!(v, arr(&sorted));
            } else {
                prop_assert_eq!(&xs, &sorted);
            }
            replay_matches_snapshots(src, vec![arr(&xs)]);
        }
    }

    #[test]
    fn max_returns_maximum(xs in proptest::collection::vec(-1000i64..1000, 1..10)) {
        let p = parse(programs::MAX).unwrap();
        let ex = run(&p, &[arr(&xs)], &ExecOptions::default());
        prop_assert_eq!(ex.return_value, Some(Value::Int(*xs.iter().max().unwrap())));
        replay_matches_snapshots(programs::MAX, vec![arr(&xs)]);
    }

    #[test]
    fn literal_expressions_round_trip(a in -100i64..100, b in -100i64..100, c in 1i64..100) {
        let src = format!("fn f() {{ int x = {a} - ({b} - {c}) * {a} % {c}; bool t = {a} < {b} || !({b} == {c}) && true; }}");
        let p = parse(&src).unwrap();
        let q = parse(&print_program(&p)).unwrap();
        prop_assert_eq!(&p, &q);
        let ex1 = run(&p, &[], &ExecOptions::default());
        let ex2 = run(&q, &[], &ExecOptions::default());
        prop_assert_eq!(ex1.events, ex2.events);
    }
}
