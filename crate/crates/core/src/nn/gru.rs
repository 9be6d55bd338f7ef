use rand_chacha::ChaCha8Rng;

use super::{Graph, GruVars, NnError, ParamSet, Tensor, Var};

/// Parameter indices of one GRU layer inside a [`ParamSet`].
#[derive(Clone, Copy, Debug)]
pub struct GruLayer {
    pub input: usize,
    pub hidden: usize,
    wx: usize,
    uzr: usize,
    uh: usize,
    b: usize,
}

impl GruLayer {
    pub fn new(params: &mut ParamSet, prefix: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        // Gate blocks are initialised as separate [fan_in × k] matrices.
        let wx = blocks(3, input, hidden, rng);
        let uzr = blocks(2, hidden, hidden, rng);
        GruLayer {
            input,
            hidden,
            wx: params.add(format!("{prefix}.wx"), wx),
            uzr: params.add(format!("{prefix}.uzr"), uzr),
            uh: params.add_xavier(format!("{prefix}.uh"), hidden, hidden, rng),
            b: params.add_zeros(format!("{prefix}.b"), 1, 3 * hidden),
        }
    }

    pub fn vars(&self, g: &mut Graph, params: &ParamSet) -> GruVars {
        GruVars {
            wx: g.param(params, self.wx),
            uzr: g.param(params, self.uzr),
            uh: g.param(params, self.uh),
            b: g.param(params, self.b),
        }
    }

    pub fn zero_state(&self, g: &mut Graph, rows: usize) -> Var {
        g.input(Tensor::zeros(rows, self.hidden))
    }
}

fn blocks(n: usize, fan_in: usize, k: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let parts: Vec<Tensor> = (0..n).map(|_| super::xavier(fan_in, k, rng)).collect();
    let mut out = Tensor::zeros(fan_in, n * k);
    for i in 0..fan_in {
        for (b, p) in parts.iter().enumerate() {
            out.row_mut(i)[b * k..(b + 1) * k].copy_from_slice(p.row(i));
        }
    }
    out
}

/// A stack of GRU layers run over padded, batched sequences.
#[derive(Clone, Debug)]
pub struct GruStack {
    pub layers: Vec<GruLayer>,
}

impl GruStack {
    pub fn new(params: &mut ParamSet, prefix: &str, input: usize, hidden: usize, depth: usize, rng: &mut ChaCha8Rng) -> Self {
        let layers = (0..depth)
            .map(|l| {
                let d = if l == 0 { input } else { hidden };
                GruLayer::new(params, &format!("{prefix}.{l}"), d, hidden, rng)
            })
            .collect();
        GruStack { layers }
    }

    pub fn hidden(&self) -> usize {
        self.layers.last().map_or(0, |l| l.hidden)
    }

    /// Run over `inputs[t]` (`[batch × d]` each); `masks[t][i]` says whether
    /// row `i` is live at step `t`. Returns the top layer's state after every
    /// step. Padded steps carry the previous state forward.
    pub fn run(&self, g: &mut Graph, params: &ParamSet, inputs: &[Var], masks: &[Vec<f64>]) -> Result<Vec<Var>, NnError> {
        let mut seq = inputs.to_vec();
        for layer in &self.layers {
            let vars = layer.vars(g, params);
            let rows = match seq.first() {
                Some(&v) => g.value(v).rows,
                None => return Ok(Vec::new()),
            };
            let mut h = layer.zero_state(g, rows);
            let mut out = Vec::with_capacity(seq.len());
            for (t, &x) in seq.iter().enumerate() {
                h = g.gru(x, h, vars, Some(&masks[t]))?;
                out.push(h);
            }
            seq = out;
        }
        Ok(seq)
    }
}
