use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::inputs::{Example, InputEncoder};
use super::{Model, ModelConfig, ModelError};
use crate::nn::Adam;
use crate::synth::dataset::{derive_seed, Dataset, DatasetRecord, Split};
use crate::synth::tasks::load_task;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub history: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept (0 = initial parameters).
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    /// `confusion[label][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in p.iter().enumerate() {
        if *x > p[best] {
            best = i;
        }
    }
    best
}

fn labels_of(model: &Model, records: &[&DatasetRecord]) -> Result<Vec<usize>, ModelError> {
    records
        .iter()
        .map(|r| {
            model
                .classes
                .iter()
                .position(|c| *c == r.label)
                .ok_or_else(|| ModelError::InvalidConfig(format!("unknown label `{}`", r.label)))
        })
        .collect()
}

fn check_vocab(model: &Model, records: &[&DatasetRecord]) -> Result<(), ModelError> {
    for r in records {
        if r.vocab_hash != model.dataset_vocab_hash {
            return Err(ModelError::VocabMismatch {
                expected: model.dataset_vocab_hash.clone(),
                found: r.vocab_hash.clone(),
            });
        }
    }
    Ok(())
}

/// Accuracy, mean cross-entropy and confusion matrix on encoded examples.
pub fn evaluate_examples(model: &Model, examples: &[&Example], labels: &[usize]) -> Result<Evaluation, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let c = model.classes.len();
    let probs = model.predict_proba(examples)?;
    let mut confusion = vec![vec![0; c]; c];
    let mut loss = 0.0;
    let mut correct = 0;
    for (p, &y) in probs.iter().zip(labels) {
        let pred = argmax(p);
        confusion[y][pred] += 1;
        correct += usize::from(pred == y);
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
    }
    let n = examples.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
        confusion,
    })
}

pub fn evaluate(model: &Model, records: &[&DatasetRecord]) -> Result<Evaluation, ModelError> {
    if records.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    check_vocab(model, records)?;
    let labels = labels_of(model, records)?;
    let examples: Vec<Example> = records.iter().map(|r| model.encoder.encode_record(r)).collect();
    let refs: Vec<&Example> = examples.iter().collect();
    evaluate_examples(model, &refs, &labels)
}

/// Train on the dataset's train split, early-stopping on validation
/// accuracy; the parameters of the best validation epoch are returned.
pub fn train(dataset: &Dataset, config: &ModelConfig) -> Result<(Model, TrainReport), ModelError> {
    config.validate()?;
    let train_recs = dataset.split(Split::Train);
    let val_recs = dataset.split(Split::Validation);
    if train_recs.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let task = load_task(dataset.config.task);
    let classes: Vec<String> = task.classes.iter().map(|c| c.name.to_string()).collect();
    let encoder = InputEncoder::fit(config.architecture, dataset, config.vocab_max_size, config.vocab_min_count)?;
    let mut model = Model::new(config.clone(), classes, encoder, dataset.vocab.hash())?;
    check_vocab(&model, &train_recs)?;

    let encode = |recs: &[&DatasetRecord]| -> Vec<Example> { recs.iter().map(|r| model.encoder.encode_record(r)).collect() };
    let train_x = encode(&train_recs);
    let val_x = encode(&val_recs);
    let train_y = labels_of(&model, &train_recs)?;
    let val_y = labels_of(&model, &val_recs)?;
    let report = fit(&mut model, (&train_x, &train_y), (&val_x, &val_y))?;
    Ok((model, report))
}

/// The training loop on pre-encoded examples. Mini-batches are reshuffled
/// every epoch; after `patience` epochs without a better validation accuracy
/// training stops and the best parameters are restored. Without validation
/// data the last epoch is kept.
pub fn fit(model: &mut Model, train: (&[Example], &[usize]), val: (&[Example], &[usize])) -> Result<TrainReport, ModelError> {
    let config = model.config.clone();
    let (train_x, train_y) = train;
    if train_x.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let val_refs: Vec<&Example> = val.0.iter().collect();
    let val_y = val.1;

    let mut report = TrainReport::default();
    let mut best_params = model.params.clone();
    if !val_refs.is_empty() && config.epochs > 0 {
        report.best_validation_accuracy = evaluate_examples(model, &val_refs, val_y)?.accuracy;
    }
    let mut opt = Adam::new(config.optimizer, &model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["shuffle"]));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<&Example> = idx.iter().map(|&i| &train_x[i]).collect();
            let ys: Vec<usize> = idx.iter().map(|&i| train_y[i]).collect();
            let res = model.loss_and_grads(&xs, &ys)?;
            let grad_norm = res.grads.norm();
            if !res.loss.is_finite() || !grad_norm.is_finite() {
                return Err(ModelError::DivergedLoss {
                    epoch,
                    batch: b,
                    loss: res.loss,
                    grad_norm,
                });
            }
            loss_sum += res.loss * idx.len() as f64;
            correct += res.probs.iter().zip(&ys).filter(|(p, &y)| argmax(p) == y).count();
            opt.step(&mut model.params, &res.grads);
        }
        let n = train_x.len() as f64;
        report.history.push(EpochMetrics {
            epoch,
            split: Split::Train,
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
        });
        report.epochs_run = epoch;
        if val_refs.is_empty() {
            best_params = model.params.clone();
            report.best_epoch = epoch;
            continue;
        }
        let ev = evaluate_examples(model, &val_refs, val_y)?;
        report.history.push(EpochMetrics {
            epoch,
            split: Split::Validation,
            loss: ev.loss,
            accuracy: ev.accuracy,
        });
        if ev.accuracy > report.best_validation_accuracy || report.best_epoch == 0 {
            report.best_validation_accuracy = ev.accuracy;
            report.best_epoch = epoch;
            best_params = model.params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
        if ev.accuracy >= 1.0 {
            break;
        }
    }
    model.params = best_params;
    Ok(report)
}

pub fn metrics_csv(history: &[EpochMetrics]) -> String {
    let mut s = String::from("epoch,split,loss,accuracy\n");
    for m in history {
        let _ = writeln!(s, "{},{},{:.6},{:.6}", m.epoch, m.split, m.loss, m.accuracy);
    }
    s
}

pub fn write_metrics_csv(path: &Path, history: &[EpochMetrics]) -> Result<(), ModelError> {
    std::fs::write(path, metrics_csv(history))?;
    Ok(())
}
