//! `dpe train` and `dpe eval`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use dpe::models::{evaluate, train, write_metrics_csv, Architecture, Evaluation, Model};
use dpe::synth::dataset::{load_dataset, Dataset, Split, RECORDS_FILE};
use dpe::synth::tasks::TaskId;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::Manifest;
use crate::{Common, Failure};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const EVAL_HEADER: &str = "task,architecture,split,examples,accuracy,loss";

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Architectures to train (default: the config's list).
    #[arg(long = "arch")]
    pub archs: Vec<Architecture>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Directory holding one dataset directory per task (default: <out>/data).
    #[arg(long)]
    pub data: Option<PathBuf>,
}

pub fn open_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.join(RECORDS_FILE).exists() {
        return Err(Failure::input(format!("no dataset in {} (run `dpe gen-data` first)", dir.display())).into());
    }
    load_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn data_dir(config: &ExperimentConfig, root: Option<&Path>, task: TaskId) -> PathBuf {
    match root {
        Some(r) => r.join(task.as_str()),
        None => config.data_dir(task),
    }
}

fn apply_archs(config: &mut ExperimentConfig, archs: &[Architecture]) {
    if !archs.is_empty() {
        config.architectures = archs.to_vec();
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut loaded = args.common.load()?;
    apply_archs(&mut loaded.config, &args.archs);
    if let Some(e) = args.epochs {
        loaded.config.model.insert("epochs".into(), e.into());
    }
    args.common.prepare(&loaded)?;
    let config = &loaded.config;
    for &task in &config.tasks {
        let data = data_dir(config, args.data.as_deref(), task);
        let dataset = open_dataset(&data)?;
        for &arch in &config.architectures {
            let mc = config.model_config(arch)?;
            let (model, report) = train(&dataset, &mc).with_context(|| format!("training {arch} on {task}"))?;
            let dir = config.model_dir(task, arch);
            std::fs::create_dir_all(&dir)?;
            let ckpt = dir.join(CHECKPOINT_FILE);
            let metrics = dir.join(METRICS_FILE);
            model.save(&ckpt)?;
            write_metrics_csv(&metrics, &report.history)?;
            Manifest::new("train", config)
                .details(json!({
                    "task": task,
                    "architecture": arch,
                    "data": data,
                    "model": mc,
                    "dataset_vocab_hash": dataset.vocab.hash(),
                    "parameters": model.params.tensors.iter().map(|t| t.data.len()).sum::<usize>(),
                    "best_epoch": report.best_epoch,
                    "best_validation_accuracy": report.best_validation_accuracy,
                    "epochs_run": report.epochs_run,
                }))
                .write(&dir, &[ckpt, metrics])?;
            println!(
                "{task} {arch}: best validation accuracy {:.4} at epoch {} of {}",
                report.best_validation_accuracy, report.best_epoch, report.epochs_run
            );
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "arch")]
    pub archs: Vec<Architecture>,
    /// Evaluate this checkpoint only; `--data` then names its dataset
    /// directory.
    #[arg(long, requires = "data")]
    pub checkpoint: Option<PathBuf>,
    /// Dataset directory for `--checkpoint`, otherwise the directory holding
    /// one dataset per task (default: <out>/data).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: Split,
}

fn eval_csv(task: TaskId, arch: Architecture, split: Split, n: usize, e: &Evaluation) -> String {
    format!("{EVAL_HEADER}\n{task},{arch},{split},{n},{:.6},{:.6}\n", e.accuracy, e.loss)
}

fn confusion_csv(classes: &[String], e: &Evaluation) -> String {
    let mut s = format!("label,{}\n", classes.join(","));
    for (c, row) in classes.iter().zip(&e.confusion) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{c},{}", cells.join(","));
    }
    s
}

fn evaluate_one(config: &ExperimentConfig, ckpt: &Path, dataset: &Dataset, split: Split) -> Result<()> {
    if !ckpt.exists() {
        return Err(Failure::input(format!("no checkpoint at {} (run `dpe train` first)", ckpt.display())).into());
    }
    let model = Model::load(ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
    let task = dataset.config.task;
    let arch = model.architecture();
    let records = dataset.split(split);
    let e = evaluate(&model, &records).with_context(|| format!("evaluating {}", ckpt.display()))?;
    let dir = config.eval_dir(task, arch);
    std::fs::create_dir_all(&dir)?;
    let files = [dir.join(EVAL_FILE), dir.join(CONFUSION_FILE)];
    std::fs::write(&files[0], eval_csv(task, arch, split, records.len(), &e))?;
    std::fs::write(&files[1], confusion_csv(&model.classes, &e))?;
    Manifest::new("eval", config)
        .details(json!({
            "task": task,
            "architecture": arch,
            "checkpoint": ckpt,
            "split": split,
            "examples": records.len(),
            "accuracy": e.accuracy,
            "loss": e.loss,
        }))
        .write(&dir, &files)?;
    println!("{task} {arch} {split}: accuracy {:.4} on {} programs", e.accuracy, records.len());
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut loaded = args.common.load()?;
    apply_archs(&mut loaded.config, &args.archs);
    args.common.prepare(&loaded)?;
    let config = &loaded.config;
    if let (Some(ckpt), Some(data)) = (&args.checkpoint, &args.data) {
        return evaluate_one(config, ckpt, &open_dataset(data)?, args.split);
    }
    for &task in &config.tasks {
        let dataset = open_dataset(&data_dir(config, args.data.as_deref(), task))?;
        for &arch in &config.architectures {
            evaluate_one(config, &config.model_dir(task, arch).join(CHECKPOINT_FILE), &dataset, args.split)?;
        }
    }
    Ok(())
}
