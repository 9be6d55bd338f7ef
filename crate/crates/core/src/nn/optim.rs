use serde::{Deserialize, Serialize};

use super::{Gradients, ParamSet, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Rescale gradients whose global L2 norm exceeds this.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros = || params.tensors.iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect();
        Adam {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update. Parameters without a gradient are treated as having a zero
    /// gradient, so their moments still decay.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) {
        let c = self.config;
        let scale = match c.clip_norm {
            Some(max) => {
                let n = grads.norm();
                if n > max {
                    max / n
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.t += 1;
        let b1t = 1.0 - c.beta1.powi(self.t as i32);
        let b2t = 1.0 - c.beta2.powi(self.t as i32);
        for (i, p) in params.tensors.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let g = grads.grads.get(i).and_then(Option::as_ref);
            for j in 0..p.data.len() {
                let gj = g.map_or(0.0, |g| g.data[j] * scale);
                m.data[j] = c.beta1 * m.data[j] + (1.0 - c.beta1) * gj;
                v.data[j] = c.beta2 * v.data[j] + (1.0 - c.beta2) * gj * gj;
                let mh = m.data[j] / b1t;
                let vh = v.data[j] / b2t;
                p.data[j] -= c.lr * mh / (vh.sqrt() + c.eps);
            }
        }
    }
}
