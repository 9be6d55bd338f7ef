//! Turning raw executions into model-ready token sequences.

pub mod canon;
pub mod pad;
pub mod views;
pub mod vocab;

use thiserror::Error;

use crate::minilang::{Value, Verdict};

pub use canon::{canonicalize_variables, dtw_distance, CanonicalRenaming};
pub use pad::{pad_sequences, pad_states, PaddedSequences, PaddedStates};
pub use views::{
    project_state_traces, project_variable_traces, record_traces, DepEvent, StateTraceView, TraceSet,
    VariableTraceView, DEFAULT_TRACE_CAP,
};
pub use vocab::Vocabulary;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BOTTOM_TOKEN: &str = "<bottom>";
pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOTTOM: usize = 2;

/// Pseudo-variable of the dependency view marking the end of one run.
pub const SEPARATOR_VAR: &str = "<sep>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("DTW needs two non-empty sequences")]
    EmptySequence,
    #[error("malformed vocabulary file: {0}")]
    BadVocabulary(String),
}

/// Canonical token of a value. Bottom (never written) has no canonical
/// rendering of its own and maps to the reserved BOTTOM token.
pub fn tokenize_value(v: &Value) -> String {
    v.token().unwrap_or_else(|| BOTTOM_TOKEN.to_string())
}

/// Token closing one run inside a multi-input trace.
pub fn run_marker(verdict: &Verdict) -> &'static str {
    match verdict {
        Verdict::Completed => "<ok>",
        Verdict::RuntimeError { .. } => "<error>",
        Verdict::BudgetExceeded => "<budget>",
    }
}
