use dpe::encoding::canon::CanonicalModel;
use dpe::encoding::views::record_traces;
use dpe::encoding::Vocabulary;
use dpe::minilang::{parse, Value};
use dpe::models::inputs::{DepStep, Example, InputEncoder, TreeNode};
use dpe::models::{classify, evaluate, evaluate_examples, fit, train, Architecture, Model, ModelConfig, ModelError};
use dpe::nn::gradcheck;
use dpe::nn::tensor::sigmoid;
use dpe::nn::{Graph, ParamSet, Tensor};
use dpe::programs;
use dpe::synth::dataset::{generate_dataset, DatasetConfig, Split};
use dpe::synth::tasks::TaskId;

fn vocab(n: usize) -> Vocabulary {
    let toks: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    Vocabulary::build(toks.iter().map(String::as_str), 100, 1).unwrap()
}

fn tiny_config(arch: Architecture) -> ModelConfig {
    ModelConfig {
        embedding_dim: 3,
        hidden: 4,
        layers: 2,
        state_hidden: 3,
        state_layers: 1,
        truncation: 2,
        seed: 5,
        ..ModelConfig::desk(arch)
    }
}

fn tiny_model(arch: Architecture, classes: usize) -> Model {
    let encoder = InputEncoder {
        architecture: arch,
        vocab: vocab(6),
        productions: (arch == Architecture::AstRecursive).then(|| vocab(3)),
        canonical: CanonicalModel { medoids: Vec::new() },
        top_variables: 2,
        trace_cap: 300,
    };
    let classes = (0..classes).map(|c| format!("c{c}")).collect();
    let mut m = Model::new(tiny_config(arch), classes, encoder, "hash".into()).unwrap();
    // Non-zero biases so the oracle exercises every term.
    for (name, t) in m.params.names.iter().zip(m.params.tensors.iter_mut()) {
        if name.ends_with(".b") {
            for (i, x) in t.data.iter_mut().enumerate() {
                *x = 0.1 * ((i % 5) as f64 - 2.0);
            }
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Scalar-loop oracle: every product written out from the gate equations.

fn tensor<'a>(p: &'a ParamSet, name: &str) -> &'a Tensor {
    &p.tensors[p.index(name).unwrap_or_else(|| panic!("no parameter {name}"))]
}

fn emb(p: &ParamSet, token: usize) -> Vec<f64> {
    tensor(p, "embedding").row(token).to_vec()
}

fn gru(p: &ParamSet, prefix: &str, x: &[f64], h: &[f64]) -> Vec<f64> {
    let (wx, uzr, uh, b) = (
        tensor(p, &format!("{prefix}.wx")),
        tensor(p, &format!("{prefix}.uzr")),
        tensor(p, &format!("{prefix}.uh")),
        tensor(p, &format!("{prefix}.b")),
    );
    let k = h.len();
    let mut out = vec![0.0; k];
    let mut r = vec![0.0; k];
    let mut z = vec![0.0; k];
    for j in 0..k {
        let mut sz = b.data[j];
        let mut sr = b.data[k + j];
        for (i, xi) in x.iter().enumerate() {
            sz += xi * wx.get(i, j);
            sr += xi * wx.get(i, k + j);
        }
        for (i, hi) in h.iter().enumerate() {
            sz += hi * uzr.get(i, j);
            sr += hi * uzr.get(i, k + j);
        }
        z[j] = sigmoid(sz);
        r[j] = sigmoid(sr);
    }
    for j in 0..k {
        let mut s = b.data[2 * k + j];
        for (i, xi) in x.iter().enumerate() {
            s += xi * wx.get(i, 2 * k + j);
        }
        for i in 0..k {
            s += r[i] * h[i] * uh.get(i, j);
        }
        out[j] = (1.0 - z[j]) * h[j] + z[j] * s.tanh();
    }
    out
}

/// Two-layer stack from zero states over embedded tokens.
fn stack(p: &ParamSet, prefix: &str, layers: usize, xs: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut seq = xs.to_vec();
    for l in 0..layers {
        let mut h = vec![0.0; k];
        seq = seq
            .iter()
            .map(|x| {
                h = gru(p, &format!("{prefix}.{l}"), x, &h);
                h.clone()
            })
            .collect();
    }
    seq.last().unwrap().clone()
}

fn assert_close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
    }
}

fn embed_tokens(p: &ParamSet, ts: &[usize]) -> Vec<Vec<f64>> {
    ts.iter().map(|&t| emb(p, t)).collect()
}

// ---------------------------------------------------------------------------

#[test]
fn variable_trace_matches_oracle() {
    let m = tiny_model(Architecture::VariableTrace, 3);
    let p = &m.params;
    let traces = vec![vec![3, 4, 5], vec![5, 3]];
    let got = m.embed(&Example::Variable(traces.clone())).unwrap();
    let a = stack(p, "trace", 2, &embed_tokens(p, &traces[0]), 4);
    let b = stack(p, "trace", 2, &embed_tokens(p, &traces[1]), 4);
    let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
    assert_close(&got.data, &want);

    // Listing order of the sub-traces does not matter.
    let swapped = m.embed(&Example::Variable(vec![traces[1].clone(), traces[0].clone()])).unwrap();
    assert_eq!(swapped.data, got.data);
    // One variable: the pool is that sub-trace's final state.
    let single = m.embed(&Example::Variable(vec![traces[0].clone()])).unwrap();
    assert_close(&single.data, &a);
}

#[test]
fn variable_trace_on_max_program() {
    // The two sub-traces of the max program on [1, 5, 3], through the real
    // trace pipeline.
    let prog = programs::load(programs::MAX);
    let t = record_traces(&prog, &[vec![Value::IntArray(vec![1, 5, 3])]], 300);
    assert_eq!(t.variable.vars.len(), 2);
    let tokens: Vec<&str> = t.value_tokens().collect();
    let v = Vocabulary::build(tokens, 100, 1).unwrap();
    let mut m = tiny_model(Architecture::VariableTrace, 2);
    m.encoder.vocab = v.clone();
    let m = Model::new(m.config.clone(), m.classes.clone(), m.encoder.clone(), "h".into()).unwrap();
    let subs: Vec<Vec<usize>> = t.variable.vars.iter().map(|x| v.encode(&x.tokens)).collect();
    let got = m.embed(&Example::Variable(subs.clone())).unwrap();
    let finals: Vec<Vec<f64>> = subs
        .iter()
        .map(|s| stack(&m.params, "trace", 2, &embed_tokens(&m.params, s), 4))
        .collect();
    let want: Vec<f64> = (0..4).map(|j| finals[0][j].max(finals[1][j])).collect();
    assert_close(&got.data, &want);
}

#[test]
fn state_trace_matches_oracle() {
    let m = tiny_model(Architecture::StateTrace, 3);
    let p = &m.params;
    let states = vec![vec![2, 3], vec![4, 3], vec![4, 5], vec![1, 5]];
    let got = m.embed(&Example::State {
        arity: 2,
        states: states.clone(),
    })
    .unwrap();
    let inner: Vec<Vec<f64>> = states
        .iter()
        .map(|s| stack(p, "state", 1, &embed_tokens(p, s), 3))
        .collect();
    let want = stack(p, "trace", 2, &inner, 4);
    assert_close(&got.data, &want);

    // One state of one variable is the minimal unrolling.
    let one = m.embed(&Example::State {
        arity: 1,
        states: vec![vec![3]],
    })
    .unwrap();
    let h0 = gru(p, "state.0", &emb(p, 3), &[0.0; 3]);
    let h1 = gru(p, "trace.0", &h0, &[0.0; 4]);
    let h2 = gru(p, "trace.1", &h1, &[0.0; 4]);
    assert_close(&one.data, &h2);
}

#[test]
fn batched_state_trace_equals_single() {
    let m = tiny_model(Architecture::StateTrace, 3);
    let a = Example::State {
        arity: 2,
        states: vec![vec![2, 3], vec![4, 3]],
    };
    let b = Example::State {
        arity: 3,
        states: vec![vec![1, 1, 1], vec![5, 1, 2], vec![5, 4, 2]],
    };
    let mut g = Graph::new();
    let both = m.embed_in(&mut g, &[&a, &b], None).unwrap();
    assert_close(g.value(both).row(0), &m.embed(&a).unwrap().data);
    assert_close(g.value(both).row(1), &m.embed(&b).unwrap().data);
}

/// Hand-unrolled dependency fusion for a 2-layer model.
fn dep_oracle(p: &ParamSet, classes: &[usize], steps: &[DepStep]) -> Vec<f64> {
    let init: Vec<Vec<f64>> = (0..2).map(|l| tensor(p, &format!("init.{l}")).data.clone()).collect();
    let mut states: Vec<Option<Vec<Vec<f64>>>> = vec![None; classes.len()];
    let run = |cls: usize, x: Vec<f64>, prev: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let h0 = gru(p, &format!("var{cls}.0"), &x, &prev[0]);
        let h1 = gru(p, &format!("var{cls}.1"), &h0, &prev[1]);
        vec![h0, h1]
    };
    for s in steps {
        match s {
            DepStep::Write { slot, token, deps } => {
                let mut src: Vec<usize> = deps.iter().copied().filter(|&d| states[d].is_some()).collect();
                if states[*slot].is_some() && !src.contains(slot) {
                    src.push(*slot);
                }
                src.sort();
                let prev: Vec<Vec<f64>> = (0..2)
                    .map(|l| {
                        if src.is_empty() {
                            return init[l].clone();
                        }
                        let mut acc = states[src[0]].as_ref().unwrap()[l].clone();
                        for &d in &src[1..] {
                            for (a, b) in acc.iter_mut().zip(&states[d].as_ref().unwrap()[l]) {
                                *a *= b;
                            }
                        }
                        acc
                    })
                    .collect();
                states[*slot] = Some(run(classes[*slot], emb(p, *token), &prev));
            }
            DepStep::Separator { token } => {
                for s in 0..states.len() {
                    if let Some(prev) = states[s].clone() {
                        states[s] = Some(run(classes[s], emb(p, *token), &prev));
                    }
                }
            }
        }
    }
    let finals: Vec<&Vec<f64>> = states.iter().flatten().map(|h| &h[1]).collect();
    let mut col = vec![Vec::new(); 4];
    for f in &finals {
        for j in 0..4 {
            col[j].push(f[j]);
        }
    }
    col.iter_mut()
        .map(|c| {
            c.sort_by(f64::total_cmp);
            c.iter().sum::<f64>() / finals.len() as f64
        })
        .collect()
}

fn dep_example() -> (Vec<usize>, Vec<DepStep>) {
    let classes = vec![0, 1, 2];
    let steps = vec![
        DepStep::Write {
            slot: 0,
            token: 3,
            deps: vec![],
        },
        DepStep::Write {
            slot: 1,
            token: 4,
            deps: vec![0],
        },
        DepStep::Write {
            slot: 2,
            token: 5,
            deps: vec![0, 1],
        },
        DepStep::Write {
            slot: 0,
            token: 4,
            deps: vec![2],
        },
        DepStep::Separator { token: 1 },
    ];
    (classes, steps)
}

#[test]
fn dependency_matches_fusion_oracle() {
    let m = tiny_model(Architecture::DependencyEnforcement, 3);
    let (classes, steps) = dep_example();
    let got = m
        .embed(&Example::Dependency {
            classes: classes.clone(),
            steps: steps.clone(),
        })
        .unwrap();
    assert_close(&got.data, &dep_oracle(&m.params, &classes, &steps));
}

#[test]
fn dependency_without_edges_is_per_variable_encoding() {
    let m = tiny_model(Architecture::DependencyEnforcement, 3);
    let p = &m.params;
    let steps = vec![
        DepStep::Write {
            slot: 0,
            token: 3,
            deps: vec![],
        },
        DepStep::Write {
            slot: 1,
            token: 4,
            deps: vec![],
        },
        DepStep::Write {
            slot: 0,
            token: 5,
            deps: vec![],
        },
    ];
    let got = m
        .embed(&Example::Dependency {
            classes: vec![0, 1],
            steps,
        })
        .unwrap();
    // Each variable is a plain recurrence from the shared initial state.
    let run = |cls: usize, toks: &[usize]| {
        let mut h: Vec<Vec<f64>> = (0..2).map(|l| tensor(p, &format!("init.{l}")).data.clone()).collect();
        for &t in toks {
            let h0 = gru(p, &format!("var{cls}.0"), &emb(p, t), &h[0]);
            let h1 = gru(p, &format!("var{cls}.1"), &h0, &h[1]);
            h = vec![h0, h1];
        }
        h[1].clone()
    };
    let a = run(0, &[3, 5]);
    let b = run(1, &[4]);
    let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x.min(*y) + x.max(*y)) / 2.0).collect();
    assert_close(&got.data, &want);
}

#[test]
fn dependency_pool_ignores_slot_numbering() {
    let m = tiny_model(Architecture::DependencyEnforcement, 3);
    let (classes, steps) = dep_example();
    // Relabel slots 0 <-> 2 consistently.
    let swap = |s: usize| [2, 1, 0][s];
    let classes2: Vec<usize> = (0..3).map(|s| classes[swap(s)]).collect();
    let steps2: Vec<DepStep> = steps
        .iter()
        .map(|s| match s {
            DepStep::Write { slot, token, deps } => DepStep::Write {
                slot: swap(*slot),
                token: *token,
                deps: deps.iter().map(|&d| swap(d)).collect(),
            },
            other => other.clone(),
        })
        .collect();
    let a = m.embed(&Example::Dependency { classes, steps }).unwrap();
    let b = m
        .embed(&Example::Dependency {
            classes: classes2,
            steps: steps2,
        })
        .unwrap();
    assert_close(&a.data, &b.data);
}

#[test]
fn sequence_baselines_match_oracle() {
    for arch in [Architecture::TokenRnn, Architecture::SyntacticTraceRnn] {
        let m = tiny_model(arch, 2);
        let p = &m.params;
        let seq = vec![3, 1, 4, 1, 5];
        let got = m.embed(&Example::Sequence(seq.clone())).unwrap();
        assert_close(&got.data, &stack(p, "trace", 2, &embed_tokens(p, &seq), 4));
        let one = m.embed(&Example::Sequence(vec![4])).unwrap();
        assert_close(&one.data, &stack(p, "trace", 2, &[emb(p, 4)], 4));
        assert_eq!(m.embed(&Example::Sequence(seq.clone())).unwrap(), got);
    }
}

#[test]
fn syntactic_trace_cannot_separate_the_sorts_on_array_writes() {
    // Restricted to statements writing A, bubble and insertion sort execute
    // the same statement strings in the same order.
    let input = vec![vec![Value::IntArray(vec![8, 5, 1, 4, 3])]];
    let writes_a = |src: &str| -> Vec<String> {
        let t = record_traces(&parse(src).unwrap(), &input, 300);
        t.executed.into_iter().filter(|s| s.starts_with("A[")).collect()
    };
    let (b, i) = (writes_a(programs::BUBBLE), writes_a(programs::INSERTION));
    assert!(!b.is_empty());
    assert_eq!(b, i);
    let v = Vocabulary::build(b.iter().map(String::as_str), 100, 1).unwrap();
    let m = tiny_model(Architecture::SyntacticTraceRnn, 2);
    let mut enc = m.encoder.clone();
    enc.vocab = v.clone();
    let m = Model::new(m.config.clone(), m.classes.clone(), enc, "h".into()).unwrap();
    assert_eq!(
        m.embed(&Example::Sequence(v.encode(&b))).unwrap(),
        m.embed(&Example::Sequence(v.encode(&i))).unwrap()
    );
}

#[test]
fn straight_line_statement_sequence_is_body_order() {
    let p = parse("fn f() { int a = 1; int b = a + 2; a = b * 3; }").unwrap();
    let t = record_traces(&p, &[vec![]], 300);
    assert_eq!(t.executed, ["int a = 1;", "int b = a + 2;", "a = b * 3;", "<ok>"]);
}

#[test]
fn ast_matches_oracle() {
    let m = tiny_model(Architecture::AstRecursive, 2);
    let p = &m.params;
    let node = |label, production, children: Vec<usize>| TreeNode {
        label,
        production,
        children,
    };
    // Depth three: two leaves under an inner node, which sits with a third
    // leaf under the root.
    let tree = vec![
        node(3, 0, vec![]),
        node(4, 0, vec![]),
        node(5, 1, vec![0, 1]),
        node(3, 0, vec![]),
        node(1, 2, vec![2, 3]),
    ];
    let got = m.embed(&Example::Tree(tree.clone())).unwrap();
    let rule = |prod: usize, label: usize, kids: &[Vec<f64>]| -> Vec<f64> {
        let w = tensor(p, &format!("prod{prod}.w"));
        let b = tensor(p, &format!("prod{prod}.b"));
        let e = emb(p, label);
        (0..3)
            .map(|j| {
                let mut s = e[j] + b.data[j];
                if !kids.is_empty() {
                    for i in 0..3 {
                        let mean = kids.iter().map(|k| k[i]).sum::<f64>() / kids.len() as f64;
                        s += mean * w.get(i, j);
                    }
                }
                s.tanh()
            })
            .collect()
    };
    let l0 = rule(0, 3, &[]);
    let l1 = rule(0, 4, &[]);
    let inner = rule(1, 5, &[l0.clone(), l1]);
    let want = rule(2, 1, &[inner, l0.clone()]);
    assert_close(&got.data, &want);
    let leaf = m.embed(&Example::Tree(vec![node(3, 0, vec![])])).unwrap();
    assert_close(&leaf.data, &l0);
}

#[test]
fn classify_head() {
    let h = Tensor::from_vec(2, 3, vec![0.5, -1.0, 2.0, 3.0, 0.0, 1.0]);
    let uniform = classify(&h, &Tensor::zeros(3, 4), &Tensor::zeros(1, 4)).unwrap();
    assert!(uniform.iter().flatten().all(|&p| (p - 0.25).abs() < 1e-15));
    let b = Tensor::row_vector(vec![0.0, 0.0, 30.0, 0.0]);
    let p = classify(&h, &Tensor::zeros(3, 4), &b).unwrap();
    assert!(p.iter().all(|row| row.iter().cloned().fold(0.0, f64::max) == row[2]));
    let w = dpe::nn::xavier(3, 4, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1));
    for row in classify(&h.map(|x| x * 50.0), &w, &Tensor::zeros(1, 4)).unwrap() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert!(matches!(
        classify(&h, &Tensor::zeros(2, 4), &Tensor::zeros(1, 4)),
        Err(ModelError::Nn(_))
    ));
}

fn micro_batch(arch: Architecture) -> Vec<Example> {
    let (classes, steps) = dep_example();
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
                classes: classes.clone(),
                steps: steps.clone(),
            },
            Example::Dependency {
                classes: vec![1, 0],
                steps: vec![
                    DepStep::Write {
                        slot: 0,
                        token: 2,
                        deps: vec![],
                    },
                    DepStep::Write {
                        slot: 1,
                        token: 5,
                        deps: vec![0],
                    },
                    DepStep::Separator { token: 1 },
                ],
            },
        ],
        Architecture::TokenRnn | Architecture::SyntacticTraceRnn => {
            vec![Example::Sequence(vec![3, 4, 5]), Example::Sequence(vec![5, 2])]
        }
        Architecture::AstRecursive => vec![
            Example::Tree(vec![
                TreeNode {
                    label: 3,
                    production: 0,
                    children: vec![],
                },
                TreeNode {
                    label: 4,
                    production: 1,
                    children: vec![0],
                },
            ]),
            Example::Tree(vec![
                TreeNode {
                    label: 5,
                    production: 0,
                    children: vec![],
                },
                TreeNode {
                    label: 2,
                    production: 0,
                    children: vec![],
                },
                TreeNode {
                    label: 1,
                    production: 2,
                    children: vec![0, 1],
                },
            ]),
        ],
    }
}

#[test]
fn every_architecture_passes_gradient_check() {
    for arch in Architecture::ALL {
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
        })
        .unwrap_or_else(|e| panic!("{arch}: {e}"));
        assert!(res.max_relative_error < 1e-4, "{arch}: {res:?}");
        assert!(res.checked > 20);
    }
}

#[test]
fn batch_gradients_average_per_example_gradients() {
    for arch in [Architecture::VariableTrace, Architecture::DependencyEnforcement] {
        let m = tiny_model(arch, 3);
        let batch = micro_batch(arch);
        let both = m.loss_and_grads(&[&batch[0], &batch[1]], &[0, 2]).unwrap();
        let a = m.loss_and_grads(&[&batch[0]], &[0]).unwrap();
        let b = m.loss_and_grads(&[&batch[1]], &[2]).unwrap();
        assert!((both.loss - (a.loss + b.loss) / 2.0).abs() < 1e-12);
        for i in 0..m.params.len() {
            let get = |g: &dpe::nn::Gradients, j: usize| g.grads[i].as_ref().map_or(0.0, |t| t.data[j]);
            for j in 0..m.params.tensors[i].len() {
                let want = (get(&a.grads, j) + get(&b.grads, j)) / 2.0;
                assert!((get(&both.grads, j) - want).abs() < 1e-12);
            }
        }
    }
}

/// Two-class toy traces whose class is the identity of the first token.
fn toy(n: usize, arch: Architecture) -> (Vec<Example>, Vec<usize>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let y = i % 2;
        let first = 3 + y;
        let rest: Vec<usize> = (0..1 + i % 4).map(|k| 2 + (i + k) % 4).collect();
        let seq: Vec<usize> = std::iter::once(first).chain(rest).collect();
        xs.push(match arch {
            Architecture::VariableTrace => Example::Variable(vec![seq]),
            _ => Example::Sequence(seq),
        });
        ys.push(y);
    }
    (xs, ys)
}

#[test]
fn separable_toy_data_is_learned() {
    let mut m = tiny_model(Architecture::VariableTrace, 2);
    m.config.epochs = 50;
    m.config.batch_size = 8;
    m.config.patience = 50;
    let (xs, ys) = toy(40, Architecture::VariableTrace);
    let report = fit(&mut m, (&xs, &ys), (&[], &[])).unwrap();
    assert!(report.epochs_run <= 50);
    let refs: Vec<&Example> = xs.iter().collect();
    let ev = evaluate_examples(&m, &refs, &ys).unwrap();
    assert!(ev.accuracy >= 0.99, "{ev:?}");
    assert_eq!(ev.confusion[0][1] + ev.confusion[1][0], 0);
}

#[test]
fn zero_epochs_keep_initial_parameters_and_training_is_deterministic() {
    let (xs, ys) = toy(16, Architecture::TokenRnn);
    let mut m = tiny_model(Architecture::TokenRnn, 2);
    let before = m.params.tensors.clone();
    m.config.epochs = 0;
    let r = fit(&mut m, (&xs, &ys), (&xs, &ys)).unwrap();
    assert!(r.history.is_empty());
    assert_eq!(m.params.tensors, before);

    let run = || {
        let mut m = tiny_model(Architecture::TokenRnn, 2);
        m.config.epochs = 3;
        m.config.batch_size = 4;
        let r = fit(&mut m, (&xs, &ys), (&xs, &ys)).unwrap();
        (dpe::models::train::metrics_csv(&r.history), m.params.tensors)
    };
    assert_eq!(run(), run());
}

#[test]
fn random_head_is_near_chance() {
    let m = tiny_model(Architecture::TokenRnn, 4);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
    use rand::Rng;
    let xs: Vec<Example> = (0..1000)
        .map(|_| Example::Sequence((0..3).map(|_| rng.gen_range(0..6)).collect()))
        .collect();
    let ys: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..4)).collect();
    let refs: Vec<&Example> = xs.iter().collect();
    let acc = evaluate_examples(&m, &refs, &ys).unwrap().accuracy;
    assert!((acc - 0.25).abs() <= 0.05, "{acc}");
}

#[test]
fn empty_inputs_are_errors() {
    let m = tiny_model(Architecture::TokenRnn, 2);
    assert!(matches!(evaluate_examples(&m, &[], &[]), Err(ModelError::EmptyDataset)));
    assert!(matches!(m.embed(&Example::Sequence(vec![])), Err(ModelError::EmptyTrace)));
    let mut m2 = m.clone();
    assert!(matches!(fit(&mut m2, (&[], &[]), (&[], &[])), Err(ModelError::EmptyDataset)));
}

#[test]
fn real_dataset_round_trip() {
    let ds = generate_dataset(&DatasetConfig::new(TaskId::CountParentheses, 12, 3)).unwrap();
    let mut config = ModelConfig::desk(Architecture::DependencyEnforcement);
    config.epochs = 1;
    config.hidden = 8;
    config.embedding_dim = 4;
    let (model, report) = train(&ds, &config).unwrap();
    assert_eq!(report.epochs_run, 1);
    let test = ds.split(Split::Test);
    let ev = evaluate(&model, &test).unwrap();
    assert_eq!(ev.confusion.iter().flatten().sum::<usize>(), test.len());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.dpe");
    model.save(&path).unwrap();
    let back = Model::load(&path).unwrap();
    assert_eq!(back.params.tensors, model.params.tensors);
    assert_eq!(evaluate(&back, &test).unwrap(), ev);

    let mut other = test[0].clone();
    other.vocab_hash = "elsewhere".into();
    assert!(matches!(evaluate(&model, &[&other]), Err(ModelError::VocabMismatch { .. })));
    assert!(matches!(evaluate(&model, &[]), Err(ModelError::EmptyDataset)));
}

#[test]
fn every_architecture_embeds_real_programs_finitely() {
    let ds = generate_dataset(&DatasetConfig::new(TaskId::BinaryDigits, 6, 4)).unwrap();
    for arch in Architecture::ALL {
        let mut config = ModelConfig::desk(arch);
        config.epochs = 0;
        let (model, _) = train(&ds, &config).unwrap();
        for r in &ds.records {
            let e = model.embed(&model.encoder.encode_record(r)).unwrap();
            assert_eq!(e.len(), model.width());
            assert!(e.data.iter().all(|x| x.is_finite()), "{arch}");
        }
    }
}
