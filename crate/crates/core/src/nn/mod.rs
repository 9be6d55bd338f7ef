//! Minimal neural-network toolkit: dense tensors, a differentiable tape,
//! fused GRU cells, Adam, and a binary checkpoint format.

pub mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod gru;
pub mod optim;
pub mod tensor;

pub use graph::{Gradients, Graph, GruVars, Var};
pub use gru::{GruLayer, GruStack};
pub use optim::Adam;
pub use tensor::Tensor;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pooling over an empty set of rows")]
    AllMasked,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Named trainable tensors, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn add(&mut self, name: impl Into<String>, t: Tensor) -> usize {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    /// Xavier-uniform matrix `[fan_in × fan_out]`.
    pub fn add_xavier(&mut self, name: impl Into<String>, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> usize {
        self.add(name, xavier(fan_in, fan_out, rng))
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> usize {
        self.add(name, Tensor::zeros(rows, cols))
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }
}

/// Uniform on `[-s, s]` with `s = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-s..=s)).collect();
    Tensor::from_vec(fan_in, fan_out, data)
}
