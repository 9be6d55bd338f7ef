//! Synthetic student-program corpora: task references, error mutators,
//! semantics-preserving variation, and labelled dataset generation.

pub mod dataset;
pub mod mutators;
pub mod tasks;
pub mod variants;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("mutator `{0}` does not apply to this program")]
    NotApplicable(String),
    #[error("class `{class}` of {task}: only {got} distinct programs, {wanted} requested")]
    InsufficientDiversity {
        task: String,
        class: String,
        wanted: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
