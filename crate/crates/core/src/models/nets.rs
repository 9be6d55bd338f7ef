use rand_chacha::ChaCha8Rng;

use super::inputs::{DepStep, Example, InputEncoder, TreeNode};
use super::{Architecture, ModelConfig, ModelError};
use crate::encoding::PAD;
use crate::nn::{xavier, Graph, GruStack, GruVars, ParamSet, Tensor, Var};

#[derive(Clone, Debug)]
pub(super) enum Net {
    Variable {
        emb: usize,
        rnn: GruStack,
    },
    State {
        emb: usize,
        inner: GruStack,
        outer: GruStack,
    },
    Dependency {
        emb: usize,
        /// One stack per canonical variable, VOTHER last.
        rnns: Vec<GruStack>,
        /// Learned initial state, one per layer, shared by all variables.
        init: Vec<usize>,
    },
    Sequence {
        emb: usize,
        rnn: GruStack,
    },
    Ast {
        emb: usize,
        dim: usize,
        /// `(W, b)` per production.
        prods: Vec<(usize, usize)>,
    },
}

fn wrong_input() -> ModelError {
    ModelError::InvalidConfig("example does not match the architecture".into())
}

fn masks_f64(mask: impl Iterator<Item = bool>) -> Vec<f64> {
    mask.map(|m| if m { 1.0 } else { 0.0 }).collect()
}

impl Net {
    pub(super) fn new(c: &ModelConfig, enc: &InputEncoder, params: &mut ParamSet, rng: &mut ChaCha8Rng) -> Net {
        let v = enc.vocab.len();
        let d = c.embedding_dim;
        let emb = params.add("embedding", xavier(v, d, rng));
        match c.architecture {
            Architecture::VariableTrace => Net::Variable {
                emb,
                rnn: GruStack::new(params, "trace", d, c.hidden, c.layers, rng),
            },
            Architecture::StateTrace => {
                let inner = GruStack::new(params, "state", d, c.state_hidden, c.state_layers, rng);
                let outer = GruStack::new(params, "trace", c.state_hidden, c.hidden, c.layers, rng);
                Net::State { emb, inner, outer }
            }
            Architecture::DependencyEnforcement => {
                let rnns = (0..enc.canonical_classes())
                    .map(|k| GruStack::new(params, &format!("var{k}"), d, c.hidden, c.layers, rng))
                    .collect();
                let init = (0..c.layers)
                    .map(|l| params.add(format!("init.{l}"), xavier(1, c.hidden, rng)))
                    .collect();
                Net::Dependency { emb, rnns, init }
            }
            Architecture::TokenRnn | Architecture::SyntacticTraceRnn => Net::Sequence {
                emb,
                rnn: GruStack::new(params, "trace", d, c.hidden, c.layers, rng),
            },
            Architecture::AstRecursive => {
                let n = enc.productions.as_ref().map_or(0, |p| p.len());
                let prods = (0..n)
                    .map(|i| {
                        let w = params.add_xavier(format!("prod{i}.w"), d, d, rng);
                        let b = params.add_zeros(format!("prod{i}.b"), 1, d);
                        (w, b)
                    })
                    .collect();
                Net::Ast { emb, dim: d, prods }
            }
        }
    }

    pub(super) fn width(&self) -> usize {
        match self {
            Net::Variable { rnn, .. } | Net::Sequence { rnn, .. } => rnn.hidden(),
            Net::State { outer, .. } => outer.hidden(),
            Net::Dependency { rnns, .. } => rnns[0].hidden(),
            Net::Ast { dim, .. } => *dim,
        }
    }

    pub(super) fn embed(
        &self,
        g: &mut Graph,
        params: &ParamSet,
        batch: &[&Example],
        truncate: Option<usize>,
    ) -> Result<Var, ModelError> {
        match self {
            Net::Variable { emb, rnn } => {
                let mut rows: Vec<&[usize]> = Vec::new();
                let mut segments = Vec::new();
                for ex in batch {
                    let Example::Variable(vars) = ex else { return Err(wrong_input()) };
                    if vars.is_empty() {
                        return Err(ModelError::EmptyTrace);
                    }
                    segments.push((rows.len()..rows.len() + vars.len()).collect::<Vec<_>>());
                    rows.extend(vars.iter().map(Vec::as_slice));
                }
                let last = encode_sequences(g, params, *emb, rnn, &rows)?;
                Ok(g.segment_max(last, &segments)?)
            }
            Net::Sequence { emb, rnn } => {
                let mut rows: Vec<&[usize]> = Vec::new();
                for ex in batch {
                    let Example::Sequence(s) = ex else { return Err(wrong_input()) };
                    rows.push(s);
                }
                encode_sequences(g, params, *emb, rnn, &rows)
            }
            Net::State { emb, inner, outer } => state_embed(g, params, *emb, inner, outer, batch),
            Net::Dependency { emb, rnns, init } => {
                let mut outs = Vec::with_capacity(batch.len());
                for ex in batch {
                    let Example::Dependency { classes, steps } = ex else { return Err(wrong_input()) };
                    outs.push(dependency_embed(g, params, *emb, rnns, init, classes, steps, truncate)?);
                }
                if outs.len() == 1 {
                    return Ok(outs[0]);
                }
                Ok(g.stack_rows(&outs)?)
            }
            Net::Ast { emb, prods, .. } => {
                let mut outs = Vec::with_capacity(batch.len());
                for ex in batch {
                    let Example::Tree(nodes) = ex else { return Err(wrong_input()) };
                    outs.push(ast_embed(g, params, *emb, prods, nodes)?);
                }
                if outs.len() == 1 {
                    return Ok(outs[0]);
                }
                Ok(g.stack_rows(&outs)?)
            }
        }
    }
}

/// Run `rnn` over padded rows; returns each row's final top-layer state.
fn encode_sequences(
    g: &mut Graph,
    params: &ParamSet,
    emb: usize,
    rnn: &GruStack,
    rows: &[&[usize]],
) -> Result<Var, ModelError> {
    if rows.iter().any(|r| r.is_empty()) {
        return Err(ModelError::EmptyTrace);
    }
    let t_max = rows.iter().map(|r| r.len()).max().ok_or(ModelError::EmptyTrace)?;
    let table = g.param(params, emb);
    let mut xs = Vec::with_capacity(t_max);
    let mut masks = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let ids: Vec<usize> = rows.iter().map(|r| r.get(t).copied().unwrap_or(PAD)).collect();
        xs.push(g.lookup(table, &ids)?);
        masks.push(masks_f64(rows.iter().map(|r| t < r.len())));
    }
    let outs = rnn.run(g, params, &xs, &masks)?;
    Ok(*outs.last().expect("non-empty"))
}

fn state_embed(
    g: &mut Graph,
    params: &ParamSet,
    emb: usize,
    inner: &GruStack,
    outer: &GruStack,
    batch: &[&Example],
) -> Result<Var, ModelError> {
    let mut programs = Vec::with_capacity(batch.len());
    for ex in batch {
        let Example::State { arity, states } = ex else { return Err(wrong_input()) };
        if states.is_empty() {
            return Err(ModelError::EmptyTrace);
        }
        programs.push((*arity, states));
    }
    // Inner encoder over every live (program, time) state at once.
    let mut state_rows: Vec<&[usize]> = Vec::new();
    let mut first_row = Vec::with_capacity(programs.len());
    for (_, states) in &programs {
        first_row.push(state_rows.len());
        state_rows.extend(states.iter().map(Vec::as_slice));
    }
    let max_arity = programs.iter().map(|p| p.0).max().unwrap_or(0);
    let table = g.param(params, emb);
    let n = state_rows.len();
    let state_vecs = if max_arity == 0 {
        g.input(Tensor::zeros(n, inner.hidden()))
    } else {
        let mut xs = Vec::with_capacity(max_arity);
        let mut masks = Vec::with_capacity(max_arity);
        for j in 0..max_arity {
            let ids: Vec<usize> = state_rows.iter().map(|s| s.get(j).copied().unwrap_or(PAD)).collect();
            xs.push(g.lookup(table, &ids)?);
            masks.push(masks_f64(state_rows.iter().map(|s| j < s.len())));
        }
        *inner.run(g, params, &xs, &masks)?.last().expect("arity > 0")
    };
    // Outer encoder over each program's sequence of state vectors.
    let t_max = programs.iter().map(|p| p.1.len()).max().unwrap_or(0);
    let mut xs = Vec::with_capacity(t_max);
    let mut masks = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let sel: Vec<usize> = programs
            .iter()
            .zip(&first_row)
            .map(|((_, s), &f)| if t < s.len() { f + t } else { f })
            .collect();
        xs.push(g.select_rows(state_vecs, &sel)?);
        masks.push(masks_f64(programs.iter().map(|p| t < p.1.len())));
    }
    let outs = outer.run(g, params, &xs, &masks)?;
    Ok(*outs.last().expect("non-empty"))
}

/// Per-slot hidden states, one per layer; `None` before the first write.
type SlotStates = Vec<Option<Vec<Var>>>;

#[allow(clippy::too_many_arguments)]
pub(super) fn dependency_embed(
    g: &mut Graph,
    params: &ParamSet,
    emb: usize,
    rnns: &[GruStack],
    init: &[usize],
    classes: &[usize],
    steps: &[DepStep],
    truncate: Option<usize>,
) -> Result<Var, ModelError> {
    let start = truncate.map_or(0, |k| steps.len().saturating_sub(k));
    let mut states: SlotStates = vec![None; classes.len()];
    if start > 0 {
        // Forward-only prefix in a scratch graph; its final states enter the
        // main graph as constants.
        let mut pg = Graph::new();
        let pre = dependency_run(&mut pg, params, emb, rnns, init, classes, &steps[..start], vec![None; classes.len()])?;
        states = pre
            .into_iter()
            .map(|s| s.map(|hs| hs.into_iter().map(|h| g.input(pg.value(h).clone())).collect()))
            .collect();
    }
    let states = dependency_run(g, params, emb, rnns, init, classes, &steps[start..], states)?;
    dependency_pool(g, &states)
}

/// Average of the top-layer state of every slot that was written.
pub(super) fn dependency_pool(g: &mut Graph, states: &SlotStates) -> Result<Var, ModelError> {
    let finals: Vec<Var> = states.iter().flatten().map(|hs| *hs.last().expect("layers")).collect();
    if finals.is_empty() {
        return Err(ModelError::EmptyTrace);
    }
    let stacked = g.stack_rows(&finals)?;
    Ok(g.segment_mean(stacked, &[(0..finals.len()).collect()])?)
}

#[allow(clippy::too_many_arguments)]
pub(super) fn dependency_run(
    g: &mut Graph,
    params: &ParamSet,
    emb: usize,
    rnns: &[GruStack],
    init: &[usize],
    classes: &[usize],
    steps: &[DepStep],
    mut states: SlotStates,
) -> Result<SlotStates, ModelError> {
    let table = g.param(params, emb);
    let vars: Vec<Vec<GruVars>> = rnns
        .iter()
        .map(|r| r.layers.iter().map(|l| l.vars(g, params)).collect())
        .collect();
    let init: Vec<Var> = init.iter().map(|&i| g.param(params, i)).collect();
    for step in steps {
        match step {
            DepStep::Write { slot, token, deps } => {
                let mut sources: Vec<usize> = deps.iter().copied().filter(|&s| states[s].is_some()).collect();
                if states[*slot].is_some() && !sources.contains(slot) {
                    sources.push(*slot);
                }
                sources.sort_unstable();
                let mut x = g.lookup(table, &[*token])?;
                let mut new = Vec::with_capacity(init.len());
                for (l, lv) in vars[classes[*slot]].iter().enumerate() {
                    let prev = match sources.split_first() {
                        None => init[l],
                        Some((&first, rest)) => {
                            let mut acc = states[first].as_ref().expect("filtered")[l];
                            for &s in rest {
                                acc = g.mul(acc, states[s].as_ref().expect("filtered")[l])?;
                            }
                            acc
                        }
                    };
                    x = g.gru(x, prev, *lv, None)?;
                    new.push(x);
                }
                states[*slot] = Some(new);
            }
            DepStep::Separator { token } => {
                for s in 0..states.len() {
                    let Some(hs) = states[s].clone() else { continue };
                    let mut x = g.lookup(table, &[*token])?;
                    let mut new = Vec::with_capacity(hs.len());
                    for (l, lv) in vars[classes[s]].iter().enumerate() {
                        x = g.gru(x, hs[l], *lv, None)?;
                        new.push(x);
                    }
                    states[s] = Some(new);
                }
            }
        }
    }
    Ok(states)
}

fn ast_embed(
    g: &mut Graph,
    params: &ParamSet,
    emb: usize,
    prods: &[(usize, usize)],
    nodes: &[TreeNode],
) -> Result<Var, ModelError> {
    if nodes.is_empty() {
        return Err(ModelError::EmptyTrace);
    }
    let table = g.param(params, emb);
    let labels: Vec<usize> = nodes.iter().map(|n| n.label).collect();
    let e = g.lookup(table, &labels)?;
    let mut vals: Vec<Var> = Vec::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        let (w, b) = prods[n.production];
        let ei = g.select_rows(e, &[i])?;
        let pre = if n.children.is_empty() {
            ei
        } else {
            let kids: Vec<Var> = n.children.iter().map(|&c| vals[c]).collect();
            let stacked = g.stack_rows(&kids)?;
            let mean = g.segment_mean(stacked, &[(0..kids.len()).collect()])?;
            let wv = g.param(params, w);
            let m = g.matmul(mean, wv)?;
            g.add(m, ei)?
        };
        let bv = g.param(params, b);
        let pre = g.add_row(pre, bv)?;
        vals.push(g.tanh(pre));
    }
    Ok(*vals.last().expect("non-empty"))
}
