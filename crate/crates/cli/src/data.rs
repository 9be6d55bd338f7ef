//! `dpe gen-data`.

use anyhow::{Context, Result};
use clap::Args;
use dpe::synth::dataset::{generate_dataset, save_dataset};
use serde_json::json;

use crate::output::{parallel_map, Manifest};
use crate::Common;

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Programs per task.
    #[arg(long)]
    pub total: Option<usize>,
    /// Programs per error class (overrides --total).
    #[arg(long)]
    pub per_class: Option<usize>,
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let mut loaded = args.common.load()?;
    let c = &mut loaded.config;
    if let Some(t) = args.total {
        c.dataset.total = t;
        c.dataset.per_class = None;
    }
    if args.per_class.is_some() {
        c.dataset.per_class = args.per_class;
    }
    args.common.prepare(&loaded)?;
    let config = &loaded.config;

    let generated = parallel_map(&config.tasks, args.common.jobs, |&t| generate_dataset(&config.dataset_config(t)));
    for (&task, d) in config.tasks.iter().zip(generated) {
        let d = d.with_context(|| format!("generating {task}"))?;
        let dir = config.data_dir(task);
        let files = save_dataset(&dir, &d)?;
        let hash = d.vocab.hash();
        Manifest::new("gen-data", config)
            .details(json!({
                "task": task,
                "seed": d.config.seed,
                "dataset": d.config,
                "records": d.records.len(),
                "counts": d.counts(),
                "vocab_hash": hash,
                "vocab_size": d.vocab.len(),
            }))
            .write(&dir, &files)?;
        println!(
            "{task}: {} programs in {} (vocabulary {} tokens, hash {})",
            d.records.len(),
            dir.display(),
            d.vocab.len(),
            &hash[..12]
        );
    }
    Ok(())
}
