//! Program embedding architectures, the shared softmax classifier, training
//! and evaluation.
//!
//! Three architectures read execution traces (per-variable sub-traces,
//! program states, dependency-fused variable states); three read syntax
//! only (lexer tokens, executed statement strings, the AST).

pub mod inputs;
mod nets;
pub mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use inputs::{Example, InputEncoder};
use nets::Net;
pub use train::{evaluate, evaluate_examples, fit, train, write_metrics_csv, EpochMetrics, Evaluation, TrainReport};

use crate::nn::checkpoint::{self, CheckpointMeta};
use crate::nn::optim::AdamConfig;
use crate::nn::tensor::softmax;
use crate::nn::{Gradients, Graph, NnError, ParamSet, Tensor, Var};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no training examples")]
    EmptyDataset,
    #[error("example has an empty trace")]
    EmptyTrace,
    #[error("loss became {loss} at epoch {epoch}, batch {batch} (gradient norm {grad_norm})")]
    DivergedLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
        grad_norm: f64,
    },
    #[error("vocabulary hash {found} does not match the model's {expected}")]
    VocabMismatch { expected: String, found: String },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("encoding: {0}")]
    Encoding(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    VariableTrace,
    StateTrace,
    #[serde(alias = "dependency")]
    DependencyEnforcement,
    #[serde(alias = "token")]
    TokenRnn,
    #[serde(alias = "syntactic_trace")]
    SyntacticTraceRnn,
    #[serde(alias = "ast")]
    AstRecursive,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::VariableTrace,
        Architecture::StateTrace,
        Architecture::DependencyEnforcement,
        Architecture::TokenRnn,
        Architecture::SyntacticTraceRnn,
        Architecture::AstRecursive,
    ];
    pub const DYNAMIC: [Architecture; 3] = [
        Architecture::VariableTrace,
        Architecture::StateTrace,
        Architecture::DependencyEnforcement,
    ];
    pub const SYNTACTIC: [Architecture; 3] = [
        Architecture::TokenRnn,
        Architecture::SyntacticTraceRnn,
        Architecture::AstRecursive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::VariableTrace => "variable_trace",
            Architecture::StateTrace => "state_trace",
            Architecture::DependencyEnforcement => "dependency",
            Architecture::TokenRnn => "token_rnn",
            Architecture::SyntacticTraceRnn => "syntactic_trace",
            Architecture::AstRecursive => "ast",
        }
    }

    pub fn is_dynamic(self) -> bool {
        Self::DYNAMIC.contains(&self)
    }

    /// Architectures whose graph is built one program at a time.
    fn per_example(self) -> bool {
        matches!(self, Architecture::DependencyEnforcement | Architecture::AstRecursive)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let a = match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "variable_trace" | "variable" => Architecture::VariableTrace,
            "state_trace" | "state" => Architecture::StateTrace,
            "dependency" | "dependency_enforcement" | "deps" => Architecture::DependencyEnforcement,
            "token_rnn" | "token" | "tokens" => Architecture::TokenRnn,
            "syntactic_trace" | "syntactic_trace_rnn" | "syntactic" => Architecture::SyntacticTraceRnn,
            "ast" | "ast_recursive" => Architecture::AstRecursive,
            other => return Err(ModelError::InvalidConfig(format!("unknown architecture `{other}`"))),
        };
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub embedding_dim: usize,
    /// Width of the trace / sequence encoder.
    pub hidden: usize,
    pub layers: usize,
    /// Width and depth of the per-state encoder of the state model.
    pub state_hidden: usize,
    pub state_layers: usize,
    /// Events back-propagated through per trace in the dependency model.
    pub truncation: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without a better validation accuracy.
    pub patience: usize,
    pub seed: u64,
    pub optimizer: AdamConfig,
    /// Vocabulary limits for the syntax baselines.
    pub vocab_max_size: usize,
    pub vocab_min_count: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::full(Architecture::VariableTrace)
    }
}

impl ModelConfig {
    /// Full-size configuration: 100-dim embeddings, 2×200 trace encoder,
    /// 1×100 state encoder.
    pub fn full(architecture: Architecture) -> Self {
        ModelConfig {
            architecture,
            embedding_dim: 100,
            hidden: 200,
            layers: 2,
            state_hidden: 100,
            state_layers: 1,
            truncation: 20,
            batch_size: 64,
            epochs: 50,
            patience: 8,
            seed: 0,
            optimizer: AdamConfig::default(),
            vocab_max_size: 5000,
            vocab_min_count: 2,
        }
    }

    /// Small widths and a larger step size, sized to train on one CPU core
    /// in minutes.
    pub fn desk(architecture: Architecture) -> Self {
        ModelConfig {
            embedding_dim: 16,
            hidden: 32,
            layers: 2,
            state_hidden: 16,
            state_layers: 1,
            epochs: 40,
            patience: 8,
            optimizer: AdamConfig {
                lr: 3e-3,
                clip_norm: Some(5.0),
                ..AdamConfig::default()
            },
            ..ModelConfig::full(architecture)
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.embedding_dim == 0 || self.hidden == 0 || self.state_hidden == 0 {
            return bad("dimensions must be positive");
        }
        if self.layers == 0 || self.state_layers == 0 {
            return bad("encoders need at least one layer");
        }
        if self.truncation == 0 {
            return bad("truncation window must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0 && o.lr.is_finite()) || !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            return bad("invalid optimizer settings");
        }
        Ok(())
    }
}

/// Softmax of `h · W + b` per row of `h`.
pub fn classify(h: &Tensor, w: &Tensor, b: &Tensor) -> Result<Vec<Vec<f64>>, ModelError> {
    if h.cols != w.rows || b.shape() != (1, w.cols) {
        return Err(NnError::ShapeMismatch(format!("head {:?}/{:?} on {:?}", w.shape(), b.shape(), h.shape())).into());
    }
    let logits = h.matmul(w);
    Ok((0..logits.rows)
        .map(|i| {
            let row: Vec<f64> = logits.row(i).iter().zip(&b.data).map(|(x, y)| x + y).collect();
            softmax(&row)
        })
        .collect())
}

/// A trained or freshly initialised classifier.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub classes: Vec<String>,
    pub encoder: InputEncoder,
    /// Hash of the dataset vocabulary this model was built against.
    pub dataset_vocab_hash: String,
    pub params: ParamSet,
    net: Net,
    head_w: usize,
    head_b: usize,
}

/// Loss, gradients and class probabilities of one mini-batch.
pub struct BatchResult {
    pub loss: f64,
    pub grads: Gradients,
    pub probs: Vec<Vec<f64>>,
}

/// Batched architectures build graphs over at most this many programs.
const MAX_CHUNK: usize = 32;

impl Model {
    pub fn new(
        config: ModelConfig,
        classes: Vec<String>,
        encoder: InputEncoder,
        dataset_vocab_hash: String,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        if classes.len() < 2 {
            return Err(ModelError::InvalidConfig("need at least two classes".into()));
        }
        if encoder.architecture != config.architecture {
            return Err(ModelError::InvalidConfig("encoder built for another architecture".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let net = Net::new(&config, &encoder, &mut params, &mut rng);
        let head_w = params.add_xavier("head.w", net.width(), classes.len(), &mut rng);
        let head_b = params.add_zeros("head.b", 1, classes.len());
        Ok(Model {
            config,
            classes,
            encoder,
            dataset_vocab_hash,
            params,
            net,
            head_w,
            head_b,
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.config.architecture
    }

    /// Embedding width `k` of `h_P`.
    pub fn width(&self) -> usize {
        self.net.width()
    }

    fn check(batch: &[&Example]) -> Result<(), ModelError> {
        if batch.iter().any(|e| e.is_empty()) {
            return Err(ModelError::EmptyTrace);
        }
        Ok(())
    }

    /// Program embeddings `[batch × k]` as a graph node.
    pub fn embed_in(&self, g: &mut Graph, batch: &[&Example], truncate: Option<usize>) -> Result<Var, ModelError> {
        Self::check(batch)?;
        self.net.embed(g, &self.params, batch, truncate)
    }

    pub fn logits_in(&self, g: &mut Graph, batch: &[&Example], truncate: Option<usize>) -> Result<Var, ModelError> {
        let h = self.embed_in(g, batch, truncate)?;
        let w = g.param(&self.params, self.head_w);
        let b = g.param(&self.params, self.head_b);
        let z = g.matmul(h, w)?;
        Ok(g.add_row(z, b)?)
    }

    pub fn embed(&self, ex: &Example) -> Result<Tensor, ModelError> {
        let mut g = Graph::new();
        let h = self.embed_in(&mut g, &[ex], None)?;
        Ok(g.value(h).clone())
    }

    /// Class probabilities of each example.
    pub fn predict_proba(&self, batch: &[&Example]) -> Result<Vec<Vec<f64>>, ModelError> {
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(self.chunk_size()) {
            let mut g = Graph::new();
            let h = self.embed_in(&mut g, chunk, None)?;
            out.extend(classify(
                g.value(h),
                &self.params.tensors[self.head_w],
                &self.params.tensors[self.head_b],
            )?);
        }
        Ok(out)
    }

    /// Class indices ordered from most to least probable.
    pub fn ranked_classes(&self, ex: &Example) -> Result<Vec<usize>, ModelError> {
        let p = self.predict_proba(&[ex])?.remove(0);
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
        Ok(idx)
    }

    fn chunk_size(&self) -> usize {
        if self.architecture().per_example() {
            1
        } else {
            MAX_CHUNK
        }
    }

    /// Mean cross-entropy over the batch and its gradient. The dependency
    /// model back-propagates through the last `truncation` events only.
    pub fn loss_and_grads(&self, batch: &[&Example], labels: &[usize]) -> Result<BatchResult, ModelError> {
        let truncate = (self.architecture() == Architecture::DependencyEnforcement).then_some(self.config.truncation);
        let mut grads = Gradients::zeros_like(&self.params);
        let mut loss = 0.0;
        let mut probs = Vec::with_capacity(batch.len());
        let n = batch.len() as f64;
        let chunk = self.chunk_size();
        for (exs, ys) in batch.chunks(chunk).zip(labels.chunks(chunk)) {
            let mut g = Graph::new();
            let z = self.logits_in(&mut g, exs, truncate)?;
            let (l, p) = g.softmax_xent(z, ys)?;
            let w = exs.len() as f64 / n;
            loss += w * g.value(l).data[0];
            let mut gr = g.backward(l, &self.params);
            gr.scale(w);
            grads.accumulate(gr);
            probs.extend((0..p.rows).map(|i| p.row(i).to_vec()));
        }
        Ok(BatchResult { loss, grads, probs })
    }

    pub fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            architecture: self.architecture().as_str().to_string(),
            vocab_hash: self.dataset_vocab_hash.clone(),
            seed: self.config.seed,
            config: serde_json::json!({
                "model": self.config,
                "classes": self.classes,
                "encoder": self.encoder.to_json(),
            }),
            tensors: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(checkpoint::save(path, &self.meta(), &self.params)?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let (meta, params) = checkpoint::load(path)?;
        Self::from_parts(meta, params)
    }

    pub fn from_parts(meta: CheckpointMeta, params: ParamSet) -> Result<Self, ModelError> {
        let bad = |m: String| ModelError::Checkpoint(m);
        let config: ModelConfig =
            serde_json::from_value(meta.config["model"].clone()).map_err(|e| bad(e.to_string()))?;
        let classes: Vec<String> =
            serde_json::from_value(meta.config["classes"].clone()).map_err(|e| bad(e.to_string()))?;
        let encoder = InputEncoder::from_json(&meta.config["encoder"])?;
        let mut model = Model::new(config, classes, encoder, meta.vocab_hash)?;
        if model.params.names != params.names {
            return Err(bad("parameter names differ from the architecture".into()));
        }
        for (a, b) in model.params.tensors.iter().zip(&params.tensors) {
            if a.shape() != b.shape() {
                return Err(bad(format!("tensor shape {:?} where {:?} expected", b.shape(), a.shape())));
            }
        }
        model.params = params;
        Ok(model)
    }
}
