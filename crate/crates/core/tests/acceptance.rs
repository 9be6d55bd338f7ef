//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; numeric arguments select
//! criteria (`cargo test --test acceptance -- 1 2 5`). Failing criteria are
//! reported but only make the process exit non-zero when
//! `DPE_ACCEPTANCE_STRICT=1` is set.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dpe::dependency::analyze;
use dpe::encoding::canon::{dtw_distance, CanonicalModel};
use dpe::encoding::views::{project_state_traces, project_variable_traces};
use dpe::encoding::{Vocabulary, BOTTOM_TOKEN};
use dpe::minilang::{evaluate_write, parse, run, ExecOptions, Program, StmtKind, Value, Verdict};
use dpe::models::inputs::{DepStep, Example, InputEncoder, TreeNode};
use dpe::models::{evaluate, train, write_metrics_csv, Architecture, Model, ModelConfig, ModelError};
use dpe::nn::gradcheck;
use dpe::nn::{xavier, Graph, GruLayer, NnError, ParamSet, Tensor, Var};
use dpe::programs;
use dpe::repair::bench::compose_mutants;
use dpe::repair::{
    apply_patch, enumerative_fix, guided_fix, identify_candidates, is_correct, FixSet, RepairContext,
    DEFAULT_BUDGET, DEFAULT_MAX_ROUNDS,
};
use dpe::synth::dataset::{generate_dataset, save_dataset, Dataset, DatasetConfig, Split};
use dpe::synth::tasks::{load_task, TaskId};

struct Verdicts {
    pass: bool,
    lines: Vec<String>,
}

impl Verdicts {
    fn new() -> Self {
        Verdicts {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.pass = false;
        }
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, what: impl Into<String>) {
        self.lines.push(format!("     {}", what.into()));
    }
}

/// State shared between criteria: the dependency-enforcement models trained
/// for the classification run are reused to guide repair.
#[derive(Default)]
struct Shared {
    dependency_models: BTreeMap<TaskId, Model>,
}

const DATA_SEED: u64 = 1;
const REPAIR_SEED: u64 = 3;

// ---------------------------------------------------------------------------
// 1. Trace fidelity

fn arr(xs: &[i64]) -> Value {
    Value::IntArray(xs.to_vec())
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

fn a_column(source: &str) -> Option<Vec<Vec<i64>>> {
    let p = programs::load(source);
    let ex = run(&p, &[arr(&[8, 5, 1, 4, 3])], &ExecOptions::default());
    if ex.verdict != Verdict::Completed {
        return None;
    }
    ex.events
        .iter()
        .filter(|e| e.var == "A")
        .map(|e| match &e.value {
            Value::IntArray(xs) => Some(xs.clone()),
            _ => None,
        })
        .collect()
}

fn trace_fidelity(v: &mut Verdicts, _: &mut Shared) {
    let start = Instant::now();
    let rows = |t: &[[i64; 5]; 16]| t.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    let left = a_column(programs::BUBBLE);
    let right = a_column(programs::INSERTION);
    v.check(left == Some(rows(&LEFT)), "bubble sort reproduces the left column (16 rows)");
    v.check(right == Some(rows(&RIGHT)), "insertion sort reproduces the right column (16 rows)");
    if let (Some(l), Some(r)) = (&left, &right) {
        let first = l.iter().zip(r).position(|(a, b)| a != b).map(|i| i + 1);
        v.check(
            first == Some(5) && l[4] == [1, 1, 8, 4, 3] && r[4] == [5, 1, 4, 4, 3],
            format!("columns diverge first at row {first:?}"),
        );
    }

    let p = programs::load(programs::MAX);
    let ex = run(&p, &[arr(&[1, 5, 3])], &ExecOptions::default());
    let variable: Vec<(String, String)> = ex
        .events
        .iter()
        .map(|e| (e.var.clone(), e.value.token().unwrap_or_default()))
        .collect();
    let want_variable = [
        ("max_val", "-inf"),
        ("item", "1"),
        ("max_val", "1"),
        ("item", "5"),
        ("max_val", "5"),
        ("item", "3"),
    ];
    v.check(
        variable
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .eq(want_variable.iter().copied()),
        "max on [1,5,3] reproduces the variable trace column",
    );
    // Sub-traces keep only the writes of each variable.
    let view = project_variable_traces(&ex.events);
    v.check(
        view.get("max_val") == Some(&["-inf".to_string(), "1".into(), "5".into()][..])
            && view.get("item") == Some(&["1".to_string(), "5".into(), "3".into()][..])
            && view.get("arr").is_none(),
        "per-variable sub-traces of max",
    );
    let state = project_state_traces(&ex.events, &p.tracked_variables());
    let b = BOTTOM_TOKEN;
    let want_state = [
        ["-inf", b],
        ["-inf", "1"],
        ["1", "1"],
        ["1", "5"],
        ["5", "5"],
        ["5", "3"],
    ];
    v.check(
        state.vars == ["max_val", "item"]
            && state
                .states
                .iter()
                .map(|s| s.iter().map(String::as_str).collect::<Vec<_>>())
                .eq(want_state.iter().map(|r| r.to_vec())),
        "max on [1,5,3] reproduces the state trace column (row 1 = {max_val: -inf, item: bottom})",
    );
    let t = start.elapsed();
    v.check(t < Duration::from_secs(1), format!("runtime {t:.2?} < 1s"));
}

// ---------------------------------------------------------------------------
// 2. Numerical soundness

/// Scalar loss `sum(v ⊙ W)` with a fixed random `W`.
fn weigh(g: &mut Graph, v: Var) -> Var {
    let (r, c) = g.value(v).shape();
    let w = g.input(xavier(r, c, &mut ChaCha8Rng::seed_from_u64(99)));
    let m = g.mul(v, w).unwrap();
    g.sum_all(m)
}

fn random_params(shapes: &[(usize, usize)], seed: u64) -> ParamSet {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParamSet::new();
    for (i, &(a, b)) in shapes.iter().enumerate() {
        p.add(format!("p{i}"), xavier(a, b, &mut r).map(|x| 2.0 * x));
    }
    p
}

fn op_error(params: &ParamSet, f: &OpFn<'_>) -> f64 {
    gradcheck::check(params, 50, 1e-5, |p| {
        let mut g = Graph::new();
        let vars: Vec<Var> = (0..p.len()).map(|i| g.param(p, i)).collect();
        let out = f(&mut g, &vars)?;
        let loss = if g.value(out).shape() == (1, 1) { out } else { weigh(&mut g, out) };
        Ok::<_, NnError>((g, loss))
    })
    .map(|r| r.max_relative_error)
    .unwrap_or(f64::INFINITY)
}

type OpFn<'a> = dyn Fn(&mut Graph, &[Var]) -> Result<Var, NnError> + 'a;
type OpCase = (&'static str, Vec<(usize, usize)>, Box<OpFn<'static>>);

fn op_cases() -> Vec<OpCase> {
    let m34 = vec![(3, 4), (3, 4), (1, 4)];
    vec![
        ("add", m34.clone(), Box::new(|g, v| g.add(v[0], v[1]))),
        ("sub", m34.clone(), Box::new(|g, v| g.sub(v[0], v[1]))),
        ("mul", m34.clone(), Box::new(|g, v| g.mul(v[0], v[1]))),
        ("add_row", m34.clone(), Box::new(|g, v| g.add_row(v[0], v[2]))),
        ("scale", m34.clone(), Box::new(|g, v| Ok(g.scale(v[0], -1.7)))),
        ("sigmoid", m34.clone(), Box::new(|g, v| Ok(g.sigmoid(v[0])))),
        ("tanh", m34, Box::new(|g, v| Ok(g.tanh(v[1])))),
        ("matmul", vec![(3, 5), (5, 2)], Box::new(|g, v| g.matmul(v[0], v[1]))),
        ("lookup", vec![(5, 3), (2, 3)], Box::new(|g, v| g.lookup(v[0], &[4, 0, 4, 2]))),
        ("select_rows", vec![(5, 3), (2, 3)], Box::new(|g, v| g.select_rows(v[0], &[1, 1, 3]))),
        ("stack_rows", vec![(5, 3), (2, 3)], Box::new(|g, v| g.stack_rows(&[v[1], v[0], v[1]]))),
        (
            "blend",
            vec![(5, 3), (2, 3)],
            Box::new(|g, v| {
                let a = g.select_rows(v[0], &[0, 1])?;
                g.blend(a, v[1], &[1.0, 0.0])
            }),
        ),
        (
            "segment_max",
            vec![(6, 4)],
            Box::new(|g, v| g.segment_max(v[0], &[vec![0, 2, 5], vec![1], vec![3, 4]])),
        ),
        (
            "segment_mean",
            vec![(6, 4)],
            Box::new(|g, v| g.segment_mean(v[0], &[vec![0, 2, 5], vec![1, 3, 4]])),
        ),
        (
            "max_pool",
            vec![(6, 4)],
            Box::new(|g, v| g.max_pool(v[0], &[true, false, true, true, false, true])),
        ),
        (
            "avg_pool",
            vec![(6, 4)],
            Box::new(|g, v| g.avg_pool(v[0], &[true, true, false, true, false, true])),
        ),
        (
            "softmax_xent",
            vec![(4, 3)],
            Box::new(|g, v| Ok(g.softmax_xent(v[0], &[0, 2, 1, 2])?.0)),
        ),
    ]
}

fn gru_error(seed: u64) -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParamSet::new();
    let layer = GruLayer::new(&mut p, "g", 3, 4, &mut r);
    for t in p.tensors.iter_mut() {
        t.data.iter_mut().for_each(|x| *x *= 2.0);
    }
    let bias = p.index("g.b").unwrap();
    p.tensors[bias] = xavier(1, 12, &mut r);
    p.add("x", xavier(3, 3, &mut r));
    p.add("h", xavier(3, 4, &mut r));
    let (x, h) = (p.len() - 2, p.len() - 1);
    op_error(&p, &|g, v| {
        let vars = layer.vars(g, &p);
        let h1 = g.gru(v[x], v[h], vars, Some(&[1.0, 0.0, 1.0]))?;
        g.gru(v[x], h1, vars, None)
    })
}

fn tiny_vocab(n: usize) -> Vocabulary {
    let toks: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    Vocabulary::build(toks.iter().map(String::as_str), 100, 1).unwrap()
}

fn tiny_model(arch: Architecture, classes: usize) -> Model {
    let config = ModelConfig {
        embedding_dim: 3,
        hidden: 4,
        layers: 2,
        state_hidden: 3,
        state_layers: 1,
        truncation: 2,
        seed: 5,
        ..ModelConfig::desk(arch)
    };
    let encoder = InputEncoder {
        architecture: arch,
        vocab: tiny_vocab(6),
        productions: (arch == Architecture::AstRecursive).then(|| tiny_vocab(3)),
        canonical: CanonicalModel { medoids: Vec::new() },
        top_variables: 2,
        trace_cap: 300,
    };
    let classes = (0..classes).map(|c| format!("c{c}")).collect();
    let mut m = Model::new(config, classes, encoder, "hash".into()).unwrap();
    for (name, t) in m.params.names.iter().zip(m.params.tensors.iter_mut()) {
        if name.ends_with(".b") {
            for (i, x) in t.data.iter_mut().enumerate() {
                *x = 0.1 * ((i % 5) as f64 - 2.0);
            }
        }
    }
    m
}

fn write(slot: usize, token: usize, deps: Vec<usize>) -> DepStep {
    DepStep::Write { slot, token, deps }
}

fn leaf(label: usize) -> TreeNode {
    TreeNode {
        label,
        production: 0,
        children: vec![],
    }
}

fn micro_batch(arch: Architecture) -> Vec<Example> {
    match arch {
        Architecture::VariableTrace => vec![
            Example::Variable(vec![vec![3, 4, 5], vec![2]]),
            Example::Variable(vec![vec![4, 4], vec![5, 3, 2, 1], vec![3]]),
        ],
        Architecture::StateTrace => vec![
            Example::State {
                arity: 2,
                states: vec![vec![2, 3], vec![4, 3]],
            },
            Example::State {
                arity: 3,
                states: vec![vec![1, 2, 2], vec![5, 2, 2], vec![5, 4, 2]],
            },
        ],
        Architecture::DependencyEnforcement => vec![
            Example::Dependency {
                classes: vec![0, 1, 2],
                steps: vec![
                    write(0, 3, vec![]),
                    write(1, 4, vec![0]),
                    write(2, 5, vec![0, 1]),
                    write(0, 4, vec![2]),
                    DepStep::Separator { token: 1 },
                ],
            },
            Example::Dependency {
                classes: vec![1, 0],
                steps: vec![write(0, 2, vec![]), write(1, 5, vec![0]), DepStep::Separator { token: 1 }],
            },
        ],
        Architecture::TokenRnn | Architecture::SyntacticTraceRnn => {
            vec![Example::Sequence(vec![3, 4, 5]), Example::Sequence(vec![5, 2])]
        }
        Architecture::AstRecursive => vec![
            Example::Tree(vec![
                leaf(3),
                TreeNode {
                    label: 4,
                    production: 1,
                    children: vec![0],
                },
            ]),
            Example::Tree(vec![
                leaf(5),
                leaf(2),
                TreeNode {
                    label: 1,
                    production: 2,
                    children: vec![0, 1],
                },
            ]),
        ],
    }
}

fn model_error(arch: Architecture) -> Result<f64, ModelError> {
    let m = tiny_model(arch, 3);
    let batch = micro_batch(arch);
    let refs: Vec<&Example> = batch.iter().collect();
    let res = gradcheck::check(&m.params, 12, 1e-5, |p| {
        let mut mm = m.clone();
        mm.params = p.clone();
        let mut g = Graph::new();
        let z = mm.logits_in(&mut g, &refs, None)?;
        let (loss, _) = g.softmax_xent(z, &[0, 2])?;
        Ok::<_, ModelError>((g, loss))
    })?;
    Ok(res.max_relative_error)
}

fn numerical_soundness(v: &mut Verdicts, _: &mut Shared) {
    let start = Instant::now();
    const SEEDS: u64 = 8;
    for (name, shapes, f) in op_cases() {
        let worst = (0..SEEDS)
            .map(|s| op_error(&random_params(&shapes, s), f.as_ref()))
            .fold(0.0, f64::max);
        v.check(worst < 1e-5, format!("{name}: max relative error {worst:.2e} < 1e-5 over {SEEDS} draws"));
    }
    let worst = (0..SEEDS).map(gru_error).fold(0.0, f64::max);
    v.check(worst < 1e-5, format!("gru (masked, two steps): max relative error {worst:.2e} < 1e-5"));

    for arch in Architecture::ALL {
        match model_error(arch) {
            Ok(e) => v.check(e < 1e-4, format!("{arch} micro-batch loss: max relative error {e:.2e} < 1e-4")),
            Err(e) => v.check(false, format!("{arch} micro-batch loss: {e}")),
        }
    }

    let mut runner = TestRunner::new(PropConfig {
        cases: 256,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let logits = (1usize..6, 2usize..9).prop_flat_map(|(r, c)| {
        (Just((r, c)), proptest::collection::vec(-30.0f64..30.0, r * c))
    });
    let softmax = runner.run(&logits, |((r, c), xs)| {
        let mut g = Graph::new();
        let l = g.input(Tensor::from_vec(r, c, xs));
        let (_, probs) = g.softmax_xent(l, &vec![0; r]).unwrap();
        for i in 0..r {
            let s: f64 = probs.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
            prop_assert!(probs.row(i).iter().all(|p| *p >= 0.0));
        }
        Ok(())
    });
    v.check(softmax.is_ok(), format!("softmax rows sum to 1 within 1e-12 (256 cases) {softmax:?}"));

    let pools = (
        proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..9),
        any::<u64>(),
    );
    let perm = runner.run(&pools, |(rows, seed)| {
        use rand::seq::SliceRandom;
        let n = rows.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<f64> = order.iter().flat_map(|&i| rows[i].clone()).collect();
        let mut g = Graph::new();
        let a = g.input(Tensor::from_vec(n, 3, rows.concat()));
        let b = g.input(Tensor::from_vec(n, 3, shuffled));
        let all = vec![true; n];
        let (ma, mb) = (g.max_pool(a, &all).unwrap(), g.max_pool(b, &all).unwrap());
        prop_assert_eq!(&g.value(ma).data, &g.value(mb).data);
        let (aa, ab) = (g.avg_pool(a, &all).unwrap(), g.avg_pool(b, &all).unwrap());
        prop_assert_eq!(&g.value(aa).data, &g.value(ab).data);
        Ok(())
    });
    v.check(perm.is_ok(), format!("max/avg pools are exactly permutation invariant (256 cases) {perm:?}"));

    let t = start.elapsed();
    v.check(t < Duration::from_secs(60), format!("runtime {t:.2?} < 1 min"));
}

// ---------------------------------------------------------------------------
// 3. Classification

fn dataset(task: TaskId) -> Dataset {
    generate_dataset(&DatasetConfig::with_total(task, 2500, DATA_SEED)).expect("dataset generation")
}

fn classification(v: &mut Verdicts, shared: &mut Shared) {
    for task in TaskId::ALL {
        let start = Instant::now();
        let d = dataset(task);
        let sizes: Vec<usize> = [Split::Train, Split::Validation, Split::Test].iter().map(|s| d.split(*s).len()).collect();
        v.check(sizes == [2000, 250, 250], format!("{task}: split sizes {sizes:?}"));
        let test = d.split(Split::Test);
        let mut acc = BTreeMap::new();
        for arch in Architecture::ALL {
            let t = Instant::now();
            let (model, report) = match train(&d, &ModelConfig::desk(arch)) {
                Ok(x) => x,
                Err(e) => {
                    v.check(false, format!("{task} {arch}: training failed: {e}"));
                    continue;
                }
            };
            let a = evaluate(&model, &test).map(|e| e.accuracy).unwrap_or(0.0);
            v.note(format!(
                "{:<18} {:<16} test {:>6.2}%  best val {:>6.2}% at epoch {}  ({:.0?})",
                task.as_str(),
                arch.as_str(),
                100.0 * a,
                100.0 * report.best_validation_accuracy,
                report.best_epoch,
                t.elapsed()
            ));
            acc.insert(arch, a);
            if arch == Architecture::DependencyEnforcement {
                shared.dependency_models.insert(task, model);
            }
        }
        let get = |a: Architecture| acc.get(&a).copied().unwrap_or(0.0);
        let best_syntax = Architecture::SYNTACTIC.iter().map(|a| get(*a)).fold(0.0, f64::max);
        for arch in Architecture::DYNAMIC {
            let a = get(arch);
            v.check(a >= 0.85, format!("{task} {arch}: {:.2}% >= 85%", 100.0 * a));
            v.check(
                a - best_syntax >= 0.30,
                format!(
                    "{task} {arch}: {:.2}% exceeds the best syntax baseline ({:.2}%) by >= 30 points",
                    100.0 * a,
                    100.0 * best_syntax
                ),
            );
        }
        let t = start.elapsed();
        v.check(t <= Duration::from_secs(30 * 60), format!("{task}: runtime {t:.0?} <= 30 min"));
    }
}

// ---------------------------------------------------------------------------
// 4. Repair

fn repair_speedup(v: &mut Verdicts, shared: &mut Shared) {
    for task in TaskId::ALL {
        shared.dependency_models.entry(task).or_insert_with(|| {
            train(&dataset(task), &ModelConfig::desk(Architecture::DependencyEnforcement))
                .expect("training the guide")
                .0
        });
    }
    let start = Instant::now();
    const PER_BUCKET: usize = 100;
    let mut ratios = BTreeMap::new();
    let mut wrong = 0;
    for (lo, hi) in [(1, 2), (3, 5), (6, 7)] {
        let (mut e_subsets, mut g_subsets, mut e_found, mut g_found, mut fallback, mut n) = (0u64, 0u64, 0, 0, 0, 0);
        for (k, task) in TaskId::ALL.into_iter().enumerate() {
            // 34 + 33 + 33 programs per bucket.
            let count = PER_BUCKET / 3 + usize::from(k < PER_BUCKET % 3);
            let t = load_task(task);
            let ctx = RepairContext::new(&t);
            let model = &shared.dependency_models[&task];
            let mutants = match compose_mutants(&t, lo..=hi, count, REPAIR_SEED) {
                Ok(m) => m,
                Err(e) => {
                    v.check(false, format!("{task} {lo}-{hi}: composing mutants failed: {e}"));
                    continue;
                }
            };
            for m in &mutants {
                n += 1;
                let e = enumerative_fix(&m.program, &ctx, DEFAULT_BUDGET);
                let g = match guided_fix(&m.program, &ctx, model, DEFAULT_BUDGET, DEFAULT_MAX_ROUNDS) {
                    Ok(g) => g,
                    Err(err) => {
                        v.check(false, format!("{}: guided search failed: {err}", m.id));
                        continue;
                    }
                };
                for out in [&e, &g] {
                    if let Some(p) = &out.fixed {
                        wrong += usize::from(!is_correct(p, &t));
                    }
                }
                e_subsets += e.stats.subsets_evaluated;
                g_subsets += g.stats.subsets_evaluated;
                e_found += usize::from(e.found());
                g_found += usize::from(g.found());
                fallback += usize::from(g.stats.fallback);
            }
        }
        let ratio = e_subsets as f64 / g_subsets.max(1) as f64;
        v.note(format!(
            "{lo}-{hi} errors: {n} programs, enumerative {e_subsets} subsets ({e_found} fixed), guided {g_subsets} subsets ({g_found} fixed, {fallback} fallbacks), ratio {ratio:.1}x"
        ));
        ratios.insert((lo, hi), ratio);
    }
    let r35 = ratios.get(&(3, 5)).copied().unwrap_or(0.0);
    let r67 = ratios.get(&(6, 7)).copied().unwrap_or(0.0);
    v.check(r35 >= 5.0, format!("3-5 errors: guided evaluates {r35:.1}x fewer subsets (>= 5x)"));
    v.check(r67 >= 10.0, format!("6-7 errors: guided evaluates {r67:.1}x fewer subsets (>= 10x)"));
    v.check(wrong == 0, format!("{wrong} returned fixes fail is_correct"));
    let t = start.elapsed();
    v.check(t <= Duration::from_secs(20 * 60), format!("runtime {t:.0?} <= 20 min"));
}

// ---------------------------------------------------------------------------
// 5. Oracle equivalence

fn sequences(max_len: u32, alphabet: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for code in 0..(alphabet as usize).pow(len) {
            let mut c = code;
            out.push(
                (0..len)
                    .map(|_| {
                        let d = (c % alphabet as usize) as u8;
                        c /= alphabet as usize;
                        d
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Every monotone alignment of an `m × n` grid from (0,0) to (m-1,n-1) with
/// steps (1,0), (0,1), (1,1), as a bitmask over cells `i * n + j`.
fn alignments(m: usize, n: usize) -> Vec<u64> {
    fn go(m: usize, n: usize, i: usize, j: usize, mask: u64, out: &mut Vec<u64>) {
        let mask = mask | 1 << (i * n + j);
        if i + 1 == m && j + 1 == n {
            out.push(mask);
            return;
        }
        for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
            if i + di < m && j + dj < n {
                go(m, n, i + di, j + dj, mask, out);
            }
        }
    }
    let mut out = Vec::new();
    go(m, n, 0, 0, 0, &mut out);
    out
}

fn dtw_oracle(v: &mut Verdicts) {
    let start = Instant::now();
    let seqs = sequences(6, 3);
    let mut paths: BTreeMap<(usize, usize), Vec<u64>> = BTreeMap::new();
    let (mut pairs, mut mismatches) = (0u64, 0u64);
    for a in &seqs {
        for b in &seqs {
            let ps = paths.entry((a.len(), b.len())).or_insert_with(|| alignments(a.len(), b.len()));
            let mut differ = 0u64;
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    if x != y {
                        differ |= 1 << (i * b.len() + j);
                    }
                }
            }
            let oracle = ps.iter().map(|p| (p & differ).count_ones()).min().unwrap() as usize;
            pairs += 1;
            if dtw_distance(a, b).ok() != Some(oracle) {
                mismatches += 1;
            }
        }
    }
    v.check(
        mismatches == 0,
        format!(
            "DTW equals the minimum over all alignments for {pairs} sequence pairs (lengths 1-6, 3 tokens; {mismatches} mismatches, {:.1?})",
            start.elapsed()
        ),
    );
}

fn minimality_oracle(v: &mut Verdicts) {
    const MAX_POOL: usize = 12;
    let start = Instant::now();
    let (mut checked, mut skipped, mut bad) = (0, 0, Vec::new());
    for id in TaskId::ALL {
        let task = load_task(id);
        let ctx = RepairContext::new(&task);
        for (lo, hi, n) in [(1, 1, 6), (2, 3, 8), (4, 5, 6)] {
            let Ok(mutants) = compose_mutants(&task, lo..=hi, n, 17) else {
                bad.push(format!("{id} {lo}-{hi}: composing mutants failed"));
                continue;
            };
            for m in mutants {
                let pools: Vec<_> = identify_candidates(&m.program, &ctx.solutions, ctx.candidates)
                    .iter()
                    .map(|c| ctx.corrections(&m.program, c.reference))
                    .collect();
                if pools.iter().any(|p| p.len() > MAX_POOL) {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                // Smallest passing subset over every pool the search visits.
                let mut oracle: Option<usize> = None;
                for pool in &pools {
                    for mask in 0u32..(1 << pool.len()) {
                        let size = mask.count_ones() as usize;
                        if oracle.is_some_and(|o| size >= o) {
                            continue;
                        }
                        let sub = FixSet {
                            corrections: (0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i].clone()).collect(),
                        };
                        if apply_patch(&m.program, &sub).is_ok_and(|q| is_correct(&q, &task)) {
                            oracle = Some(size);
                        }
                    }
                }
                let out = enumerative_fix(&m.program, &ctx, u64::MAX);
                let got = out.found().then(|| out.fix_size());
                let verified = out.fixed.as_ref().is_none_or(|p| is_correct(p, &task));
                if got != oracle || !verified {
                    bad.push(format!("{}: search {got:?}, oracle {oracle:?}", m.id));
                }
            }
        }
    }
    v.check(
        bad.is_empty() && checked >= 30,
        format!(
            "enumerative fixes are minimal on {checked} mutants with pools <= {MAX_POOL} ({skipped} larger skipped, {:.1?}) {bad:?}",
            start.elapsed()
        ),
    );
}

fn perturbations(v: &Value) -> Vec<Value> {
    match v {
        Value::Int(x) => (-4..=4).map(Value::Int).chain([Value::Int(x.wrapping_add(1)), Value::Int(x.wrapping_sub(1))]).filter(|y| y != v).collect(),
        Value::Bool(b) => vec![Value::Bool(!b)],
        Value::Str(s) => vec![Value::Str(format!("{s}x")), Value::Str(String::new()), Value::Str("O".into())],
        Value::IntArray(xs) => {
            let mut out = vec![Value::IntArray(Vec::new())];
            let mut longer = xs.clone();
            longer.push(7);
            out.push(Value::IntArray(longer));
            for i in 0..xs.len() {
                for d in [-1, 1] {
                    let mut ys = xs.clone();
                    ys[i] = ys[i].wrapping_add(d);
                    out.push(Value::IntArray(ys));
                }
            }
            out
        }
        Value::Bottom => vec![],
    }
}

/// Perturb every variable outside a statement's dependency set in the state
/// just before each write; the written value must not change. Returns the
/// number of perturbations tried and the violations.
fn perturb(p: &Program, inputs: &[Value]) -> (usize, Vec<String>) {
    let deps = analyze(p);
    let opts = ExecOptions {
        record_snapshots: true,
        ..ExecOptions::default()
    };
    let ex = run(p, inputs, &opts);
    let (mut tried, mut bad) = (0, Vec::new());
    for (event, env) in ex.events.iter().zip(&ex.snapshots) {
        let Some(stmt) = p.find(event.stmt_id) else {
            bad.push(format!("{}: no statement {}", p.name, event.stmt_id));
            continue;
        };
        // The loop variable's value comes from the iteration, not the state.
        if matches!(stmt.kind, StmtKind::ForEach { .. }) {
            continue;
        }
        let mut allowed: BTreeSet<String> = deps.get(stmt.id).map(|d| d.all()).unwrap_or_default();
        allowed.insert(event.var.clone());
        let base = evaluate_write(stmt, env).ok().flatten().map(|(_, v)| v);
        if base.as_ref() != Some(&event.value) {
            bad.push(format!("{}: replaying stmt {} disagrees with the trace", p.name, stmt.id));
            continue;
        }
        for (i, b) in env.bindings.iter().enumerate() {
            if allowed.contains(&b.name) || b.readonly {
                continue;
            }
            for alt in perturbations(&b.value) {
                let mut env2 = env.clone();
                env2.bindings[i].value = alt;
                tried += 1;
                let got = evaluate_write(stmt, &env2).map(|w| w.map(|(_, v)| v));
                if got != Ok(base.clone()) {
                    bad.push(format!("{}: perturbing {} changed stmt {}", p.name, b.name, stmt.id));
                }
            }
        }
    }
    (tried, bad)
}

fn dependency_oracle(v: &mut Verdicts) {
    let (mut programs_checked, mut tried, mut bad) = (0, 0, Vec::new());
    for (src, inputs) in programs::all_with_inputs() {
        let p = parse(src).expect("bundled programs parse");
        let vars: BTreeSet<String> = p
            .params
            .iter()
            .map(|x| x.name.clone())
            .chain(p.tracked_variables())
            .collect();
        if vars.len() > 3 {
            continue;
        }
        programs_checked += 1;
        for input in &inputs {
            let (t, b) = perturb(&p, input);
            tried += t;
            bad.extend(b);
        }
    }
    v.check(
        bad.is_empty() && programs_checked > 0 && tried > 0,
        format!(
            "dependency sets are sound under {tried} perturbations on {programs_checked} bundled programs with <= 3 variables {bad:?}"
        ),
    );
    // The same check on every bundled program, regardless of size.
    let (mut all_tried, mut all_bad) = (0, 0);
    for (src, inputs) in programs::all_with_inputs() {
        let p = parse(src).expect("bundled programs parse");
        for input in &inputs {
            let (t, b) = perturb(&p, input);
            all_tried += t;
            all_bad += b.len();
        }
    }
    v.check(all_bad == 0, format!("and under {all_tried} perturbations on all bundled programs ({all_bad} violations)"));
}

fn oracle_equivalence(v: &mut Verdicts, _: &mut Shared) {
    dtw_oracle(v);
    minimality_oracle(v);
    dependency_oracle(v);
}

// ---------------------------------------------------------------------------
// 6. Determinism

fn read_dir(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism(v: &mut Verdicts, _: &mut Shared) {
    let tmp = tempfile::tempdir().unwrap();
    for task in TaskId::ALL {
        let config = DatasetConfig::with_total(task, 300, 11);
        let mut saved = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{task}-{run}"));
            let d = generate_dataset(&config).expect("dataset generation");
            save_dataset(&dir, &d).expect("saving the dataset");
            saved.push((read_dir(&dir), d));
        }
        let files: Vec<&String> = saved[0].0.keys().collect();
        v.check(
            saved[0].0 == saved[1].0 && files.len() >= 4,
            format!("{task}: dataset files {files:?} are byte-identical across reruns"),
        );
        let d = &saved[0].1;
        for arch in [Architecture::DependencyEnforcement, Architecture::StateTrace, Architecture::AstRecursive] {
            let mut config = ModelConfig::desk(arch);
            config.epochs = 3;
            config.seed = 5;
            let mut outputs = Vec::new();
            for run in 0..2 {
                let dir = tmp.path().join(format!("{task}-{arch}-{run}"));
                std::fs::create_dir_all(&dir).unwrap();
                let (model, report) = train(d, &config).expect("training");
                write_metrics_csv(&dir.join("metrics.csv"), &report.history).unwrap();
                model.save(&dir.join("model.ckpt")).unwrap();
                outputs.push(read_dir(&dir));
            }
            v.check(
                outputs[0] == outputs[1],
                format!("{task} {arch}: metrics.csv and checkpoint are byte-identical across reruns"),
            );
        }
    }
}

// ---------------------------------------------------------------------------

type Criterion = (usize, &'static str, fn(&mut Verdicts, &mut Shared));

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        (1, "trace fidelity", trace_fidelity),
        (2, "numerical soundness", numerical_soundness),
        (3, "classification at desk scale", classification),
        (4, "repair speedup at desk scale", repair_speedup),
        (5, "oracle equivalence", oracle_equivalence),
        (6, "determinism", determinism),
    ];
    let selected: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut shared = Shared::default();
    let mut summary = Vec::new();
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let mut v = Verdicts::new();
        f(&mut v, &mut shared);
        for line in &v.lines {
            println!("  [{n}] {line}");
        }
        let line = format!(
            "{} criterion {n} ({name}) in {:.1?}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
        println!("{line}");
        summary.push((v.pass, line));
    }
    println!("\nacceptance summary");
    for (_, line) in &summary {
        println!("{line}");
    }
    let failed = summary.iter().filter(|(ok, _)| !ok).count();
    let strict = std::env::var("DPE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
