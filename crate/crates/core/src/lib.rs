//! Dynamic program embeddings: learn vector representations of programs from
//! their execution traces, classify student errors with them, and use the
//! classifier to steer automated repair.

pub mod dependency;
pub mod edit;
pub mod encoding;
pub mod minilang;
pub mod models;
pub mod nn;
pub mod programs;
pub mod repair;
pub mod synth;
