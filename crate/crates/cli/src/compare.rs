//! `dpe compare`: join evaluation and repair results of one or more runs
//! into summary tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use dpe::models::Architecture;
use dpe::synth::tasks::TaskId;
use serde_json::json;

use crate::config::Loaded;
use crate::model::EVAL_FILE;
use crate::output::Manifest;
use crate::repair::BENCHMARK_FILE;
use crate::Failure;

pub const CLASSIFICATION_FILE: &str = "classification.csv";
pub const CLASSIFICATION_HEADER: &str = "task,architecture,accuracy";
pub const REPAIR_FILE: &str = "repair.csv";
pub const REPAIR_HEADER: &str =
    "task,errors,method,programs,found,mean_subsets_evaluated,mean_fix_size,mean_wall_ms";

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Experiment configs or run directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory (default: <first run>/compare).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluation split to report.
    #[arg(long, default_value = "test")]
    pub split: String,
}

fn run_dir(input: &Path) -> Result<PathBuf> {
    if input.is_dir() {
        return Ok(input.to_path_buf());
    }
    if !input.exists() {
        return Err(Failure::input(format!("{} does not exist", input.display())).into());
    }
    Ok(Loaded::read(Some(input))?.config.output)
}

/// Files called `name` exactly `depth` directories below `root`.
fn find(root: &Path, depth: usize, name: &str) -> Result<Vec<PathBuf>> {
    let mut level = vec![root.to_path_buf()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for d in level {
            if !d.is_dir() {
                continue;
            }
            for e in std::fs::read_dir(&d)? {
                let p = e?.path();
                if p.is_dir() {
                    next.push(p);
                }
            }
        }
        level = next;
    }
    let mut out: Vec<PathBuf> = level.into_iter().map(|d| d.join(name)).filter(|p| p.exists()).collect();
    out.sort();
    Ok(out)
}

/// Rows of a CSV as header-keyed maps.
fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Failure::input(format!("{} is empty", path.display())))?
        .split(',')
        .collect();
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != header.len() {
                return Err(Failure::input(format!("{}: malformed row `{l}`", path.display())).into());
            }
            Ok(header.iter().zip(cells).map(|(h, c)| (h.to_string(), c.to_string())).collect())
        })
        .collect()
}

fn field<'a>(row: &'a BTreeMap<String, String>, key: &str, path: &Path) -> Result<&'a str> {
    row.get(key)
        .map(String::as_str)
        .ok_or_else(|| Failure::input(format!("{}: no `{key}` column", path.display())).into())
}

fn num<T: std::str::FromStr>(row: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<T> {
    let v = field(row, key, path)?;
    v.parse()
        .map_err(|_| Failure::input(format!("{}: `{key}` is not a number: {v}", path.display())).into())
}

#[derive(Default)]
struct RepairCell {
    programs: usize,
    found: usize,
    subsets: u64,
    fix_size: usize,
    wall_ms: u128,
}

fn task_rank(t: &str) -> usize {
    TaskId::ALL.iter().position(|x| x.as_str() == t).unwrap_or(usize::MAX)
}

fn arch_rank(a: &str) -> usize {
    Architecture::ALL.iter().position(|x| x.as_str() == a).unwrap_or(usize::MAX)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let dirs: Vec<PathBuf> = args.inputs.iter().map(|i| run_dir(i)).collect::<Result<_>>()?;
    let out = args.out.clone().unwrap_or_else(|| dirs[0].join("compare"));

    let mut accuracy: BTreeMap<(usize, usize, String, String), f64> = BTreeMap::new();
    let mut repair: BTreeMap<(usize, String, usize, String), RepairCell> = BTreeMap::new();
    let mut sources = Vec::new();
    for dir in &dirs {
        for path in find(&dir.join("eval"), 2, EVAL_FILE)? {
            for row in read_csv(&path)? {
                if field(&row, "split", &path)? != args.split {
                    continue;
                }
                let (t, a) = (field(&row, "task", &path)?, field(&row, "architecture", &path)?);
                let key = (task_rank(t), arch_rank(a), t.to_string(), a.to_string());
                if accuracy.insert(key, num(&row, "accuracy", &path)?).is_some() {
                    eprintln!("warning: {t} {a} appears in several runs; keeping {}", path.display());
                }
            }
            sources.push(path);
        }
        for path in find(&dir.join("repair"), 1, BENCHMARK_FILE)? {
            for row in read_csv(&path)? {
                let t = field(&row, "task", &path)?.to_string();
                let errors: usize = num(&row, "errors", &path)?;
                let method = field(&row, "method", &path)?.to_string();
                let found = field(&row, "found", &path)? == "true";
                for task in [t.clone(), "all".to_string()] {
                    let cell = repair.entry((task_rank(&task), task, errors, method.clone())).or_default();
                    cell.programs += 1;
                    cell.found += usize::from(found);
                    cell.subsets += num::<u64>(&row, "subsets_evaluated", &path)?;
                    cell.fix_size += num::<usize>(&row, "fix_size", &path)?;
                    cell.wall_ms += num::<u128>(&row, "wall_ms", &path)?;
                }
            }
            sources.push(path);
        }
    }
    if sources.is_empty() {
        return Err(Failure::input("no eval.csv or benchmark.csv files under the given runs".to_string()).into());
    }

    let mut classification = format!("{CLASSIFICATION_HEADER}\n");
    for ((_, _, t, a), acc) in &accuracy {
        let _ = writeln!(classification, "{t},{a},{acc:.6}");
    }
    let mut table = format!("{REPAIR_HEADER}\n");
    for ((_, t, errors, method), c) in &repair {
        let n = c.programs as f64;
        let _ = writeln!(
            table,
            "{t},{errors},{method},{},{},{:.3},{:.3},{:.3}",
            c.programs,
            c.found,
            c.subsets as f64 / n,
            c.fix_size as f64 / n,
            c.wall_ms as f64 / n
        );
    }
    std::fs::create_dir_all(&out)?;
    let files = [out.join(CLASSIFICATION_FILE), out.join(REPAIR_FILE)];
    std::fs::write(&files[0], classification)?;
    std::fs::write(&files[1], table)?;
    Manifest::bare("compare")
        .details(json!({ "inputs": args.inputs, "split": args.split, "sources": sources }))
        .write(&out, &files)?;
    println!(
        "{} classification rows, {} repair rows in {}",
        accuracy.len(),
        repair.len(),
        out.display()
    );
    Ok(())
}
