//! `dpe`: run programs, generate corpora, train and evaluate classifiers,
//! and benchmark repair searches.
//!
//! Exit codes: 0 success, 1 bad input (syntax or runtime errors, missing or
//! malformed files, mismatched vocabularies), 2 budget or resource limits,
//! 3 internal failures.

mod compare;
mod config;
mod data;
mod model;
mod output;
mod repair;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dpe::minilang::ParseError;
use dpe::models::ModelError;
use dpe::repair::RepairError;
use dpe::synth::tasks::TaskId;
use dpe::synth::SynthError;

use config::{resolve_seed, Loaded};

#[derive(Parser, Debug)]
#[command(name = "dpe", version, about = "Dynamic program embeddings for error classification and repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a program and print its output (or its write trace).
    Run(run::RunArgs),
    /// Generate labelled datasets of buggy programs.
    GenData(data::GenDataArgs),
    /// Train classifiers on generated datasets.
    Train(model::TrainArgs),
    /// Evaluate checkpoints on a dataset split.
    Eval(model::EvalArgs),
    /// Benchmark enumerative and guided repair.
    Repair(repair::RepairArgs),
    /// Summarise evaluation and repair results across runs.
    Compare(compare::CompareArgs),
}

/// Options shared by the experiment commands. Flags override the config
/// file; `DPE_SEED` overrides the file's seed but not `--seed`.
#[derive(Args, Debug)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Restrict to these tasks.
    #[arg(long = "task")]
    pub tasks: Vec<TaskId>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for dataset generation and per-program repair.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl Common {
    pub fn load(&self) -> Result<Loaded> {
        let mut loaded = Loaded::read(self.config.as_deref()).map_err(|e| Failure::input(format!("{e:#}")))?;
        let c = &mut loaded.config;
        if !self.tasks.is_empty() {
            c.tasks = self.tasks.clone();
        }
        if let Some(o) = &self.out {
            c.output = o.clone();
        }
        resolve_seed(c, self.seed).map_err(|e| Failure::input(format!("{e:#}")))?;
        Ok(loaded)
    }

    /// Validate the final config and copy the file into the output
    /// directory.
    pub fn prepare(&self, loaded: &Loaded) -> Result<()> {
        loaded.config.validate().map_err(|e| Failure::input(format!("{e:#}")))?;
        loaded.copy_to_output()
    }
}

/// An error with an explicit exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: String) -> Self {
        Failure { code: 1, message }
    }

    pub fn budget(message: String) -> Self {
        Failure { code: 2, message }
    }

    pub fn internal(message: String) -> Self {
        Failure { code: 3, message }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.code;
        }
        if cause.is::<ParseError>() || cause.is::<RepairError>() || cause.is::<std::io::Error>() {
            return 1;
        }
        if cause.is::<serde_json::Error>() {
            return 1;
        }
        if let Some(s) = cause.downcast_ref::<SynthError>() {
            return match s {
                SynthError::InsufficientDiversity { .. } => 2,
                SynthError::Internal(_) => 3,
                _ => 1,
            };
        }
        if let Some(m) = cause.downcast_ref::<ModelError>() {
            return match m {
                ModelError::DivergedLoss { .. } | ModelError::Nn(_) => 3,
                _ => 1,
            };
        }
    }
    3
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::GenData(a) => data::cmd_gen_data(a),
        Command::Train(a) => model::cmd_train(a),
        Command::Eval(a) => model::cmd_eval(a),
        Command::Repair(a) => repair::cmd_repair(a),
        Command::Compare(a) => compare::cmd_compare(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
