//! `dpe repair`: run the enumerative and guided searches over a corpus of
//! buggy programs and write the benchmark table.

use std::collections::BTreeMap;
use std::io::{BufRead, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use dpe::minilang::{parse, print_program, Program};
use dpe::models::Model;
use dpe::repair::bench::{benchmark_csv, compose_mutants, BenchmarkRow};
use dpe::repair::{enumerative_fix, guided_fix, is_correct, RepairContext, RepairOutcome};
use dpe::synth::tasks::{load_task, TaskId};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, Method};
use crate::model::CHECKPOINT_FILE;
use crate::output::{parallel_map, Manifest};
use crate::{Common, Failure};

pub const BENCHMARK_FILE: &str = "benchmark.csv";
pub const MUTANTS_FILE: &str = "mutants.jsonl";

#[derive(Args, Debug)]
pub struct RepairArgs {
    #[command(flatten)]
    pub common: Common,
    /// Search methods to run (default: the config's list).
    #[arg(long = "method", value_enum)]
    pub methods: Vec<Method>,
    /// JSONL of buggy programs with `id`, `task` and `source` fields (a
    /// generated dataset works). Without it, composed mutants are built from
    /// the config's buckets.
    #[arg(long)]
    pub programs: Option<PathBuf>,
    /// Checkpoint guiding the search (default:
    /// <out>/models/<task>/<guide>/model.ckpt).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub per_bucket: Option<usize>,
    /// Subset evaluations allowed per program and method.
    #[arg(long)]
    pub budget: Option<u64>,
}

/// One buggy program of the benchmark.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub task: TaskId,
    /// Injected errors; dataset records carry one.
    #[serde(default = "one")]
    pub errors: usize,
    #[serde(default)]
    pub bucket: String,
    #[serde(default)]
    pub mutators: Vec<String>,
    #[serde(default)]
    pub classes: Vec<String>,
    pub source: String,
}

fn one() -> usize {
    1
}

fn read_instances(path: &Path) -> Result<Vec<Instance>> {
    let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut x: Instance = serde_json::from_str(&line)
            .map_err(|e| Failure::input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if x.bucket.is_empty() {
            x.bucket = "all".into();
        }
        out.push(x);
    }
    Ok(out)
}

fn composed(config: &ExperimentConfig, task: TaskId) -> Result<Vec<Instance>> {
    let t = load_task(task);
    let mut out = Vec::new();
    for &[lo, hi] in &config.repair.buckets {
        for m in compose_mutants(&t, lo..=hi, config.repair.per_bucket, config.seed)? {
            out.push(Instance {
                id: m.id.clone(),
                task,
                errors: m.errors(),
                bucket: format!("{lo}-{hi}"),
                mutators: m.mutators.clone(),
                classes: m.classes.clone(),
                source: print_program(&m.program),
            });
        }
    }
    Ok(out)
}

fn write_instances(path: &Path, xs: &[Instance]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for x in xs {
        serde_json::to_writer(&mut w, x)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn repair_one(
    x: &Instance,
    p: &Program,
    ctx: &RepairContext,
    model: Option<&Model>,
    methods: &[Method],
    config: &ExperimentConfig,
) -> Result<Vec<(Method, RepairOutcome)>> {
    let budget = config.repair.budget;
    let mut out = Vec::new();
    for &m in methods {
        let outcome = match m {
            Method::Enum => enumerative_fix(p, ctx, budget),
            Method::Guided => guided_fix(p, ctx, model.expect("guided runs load a model"), budget, config.repair.max_rounds)?,
        };
        if let Some(fixed) = &outcome.fixed {
            if !is_correct(fixed, &ctx.task) {
                return Err(Failure::internal(format!("{} fix for {} does not pass the tests", m.as_str(), x.id)).into());
            }
        }
        out.push((m, outcome));
    }
    Ok(out)
}

#[derive(Default)]
struct Tally {
    programs: usize,
    found: usize,
    subsets: u64,
}

pub fn cmd_repair(args: &RepairArgs) -> Result<()> {
    let mut loaded = args.common.load()?;
    let c = &mut loaded.config;
    if !args.methods.is_empty() {
        c.repair.methods = args.methods.clone();
    }
    if let Some(n) = args.per_bucket {
        c.repair.per_bucket = n;
    }
    if let Some(b) = args.budget {
        c.repair.budget = b;
    }
    c.repair.methods.sort();
    c.repair.methods.dedup();
    let input = match &args.programs {
        Some(path) => {
            let xs = read_instances(path)?;
            c.tasks = TaskId::ALL.into_iter().filter(|t| xs.iter().any(|x| x.task == *t)).collect();
            if c.tasks.is_empty() {
                return Err(Failure::input(format!("{} holds no programs", path.display())).into());
            }
            Some(xs)
        }
        None => None,
    };
    args.common.prepare(&loaded)?;
    let config = &loaded.config;
    let methods = &config.repair.methods;

    for &task in &config.tasks {
        let instances = match &input {
            Some(xs) => xs.iter().filter(|x| x.task == task).cloned().collect(),
            None => composed(config, task)?,
        };
        let programs: Vec<Program> = instances
            .iter()
            .map(|x| parse(&x.source).map_err(|e| Failure::input(format!("program {}: {e}", x.id))))
            .collect::<Result<_, _>>()?;
        let model = if methods.contains(&Method::Guided) {
            let ckpt = match &args.checkpoint {
                Some(p) => p.clone(),
                None => config.model_dir(task, config.repair.guide).join(CHECKPOINT_FILE),
            };
            if !ckpt.exists() {
                return Err(Failure::input(format!(
                    "guided repair needs a checkpoint; none at {} (train one or pass --checkpoint)",
                    ckpt.display()
                ))
                .into());
            }
            Some(Model::load(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?)
        } else {
            None
        };
        let mut ctx = RepairContext::new(&load_task(task));
        ctx.candidates = config.repair.candidates;

        let jobs: Vec<usize> = (0..instances.len()).collect();
        let results = parallel_map(&jobs, args.common.jobs, |&i| {
            repair_one(&instances[i], &programs[i], &ctx, model.as_ref(), methods, config)
        });

        let mut rows = Vec::new();
        let mut tally: BTreeMap<(String, Method), Tally> = BTreeMap::new();
        for (x, r) in instances.iter().zip(results) {
            for (m, outcome) in r? {
                let t = tally.entry((x.bucket.clone(), m)).or_default();
                t.programs += 1;
                t.found += usize::from(outcome.found());
                t.subsets += outcome.stats.subsets_evaluated;
                rows.push(BenchmarkRow {
                    program_id: x.id.clone(),
                    task,
                    errors: x.errors,
                    method: m.as_str().to_string(),
                    found: outcome.found(),
                    fix_size: outcome.fix_size(),
                    subsets_evaluated: outcome.stats.subsets_evaluated,
                    wall_ms: outcome.stats.wall.as_millis(),
                });
            }
        }

        let dir = config.repair_dir(task);
        std::fs::create_dir_all(&dir)?;
        let mut files = vec![dir.join(BENCHMARK_FILE)];
        std::fs::write(&files[0], benchmark_csv(&rows))?;
        if input.is_none() {
            files.push(dir.join(MUTANTS_FILE));
            write_instances(&files[1], &instances)?;
        }
        let summary: Vec<_> = tally
            .iter()
            .map(|((bucket, m), t)| {
                json!({"bucket": bucket, "method": m.as_str(), "programs": t.programs, "found": t.found, "subsets_evaluated": t.subsets})
            })
            .collect();
        Manifest::new("repair", config)
            .details(json!({
                "task": task,
                "programs": args.programs,
                "checkpoint": args.checkpoint,
                "summary": summary,
            }))
            .write(&dir, &files)?;
        for ((bucket, m), t) in &tally {
            println!(
                "{task} {bucket} {}: fixed {}/{}, {} subsets evaluated",
                m.as_str(),
                t.found,
                t.programs,
                t.subsets
            );
        }
    }
    Ok(())
}
