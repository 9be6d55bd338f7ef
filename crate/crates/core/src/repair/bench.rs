//! Composed-mutant repair benchmark.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{discrepancies, is_correct, RepairOutcome};
use crate::edit;
use crate::minilang::{check, print_program, Program};
use crate::synth::dataset::derive_seed;
use crate::synth::mutators::mutators;
use crate::synth::tasks::{Task, TaskId};
use crate::synth::SynthError;

/// A reference with several mutations applied one after another.
#[derive(Clone, Debug)]
pub struct ComposedMutant {
    pub id: String,
    pub task: TaskId,
    pub reference: usize,
    /// Mutator ids in application order.
    pub mutators: Vec<String>,
    pub classes: Vec<String>,
    pub program: Program,
}

impl ComposedMutant {
    pub fn errors(&self) -> usize {
        self.mutators.len()
    }
}

/// `count` distinct failing mutants, each carrying a number of injected
/// errors drawn uniformly from `errors`. Every step applies a random
/// applicable mutation (of any class) to the result of the previous one,
/// among those that add at least one discrepancy against the reference, so
/// later mutations do not simply overwrite earlier ones.
pub fn compose_mutants(
    task: &Task,
    errors: RangeInclusive<usize>,
    count: usize,
    seed: u64,
) -> Result<Vec<ComposedMutant>, SynthError> {
    let bucket = format!("{}-{}", errors.start(), errors.end());
    let ms = mutators(task.id);
    let mut seen: HashSet<String> = task.references.iter().map(print_program).collect();
    let mut out = Vec::with_capacity(count);
    for attempt in 0..count * 50 {
        if out.len() == count {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &[task.id.as_str(), "compose", &bucket, &attempt.to_string()],
        ));
        let n = rng.gen_range(errors.clone());
        let reference = rng.gen_range(0..task.references.len());
        let mut current = task.references[reference].clone();
        let mut applied = Vec::new();
        let base = &task.references[reference];
        for _ in 0..n {
            let text = print_program(&current);
            let before = discrepancies(&current, base).len();
            let options: Vec<(usize, Program)> = ms
                .iter()
                .enumerate()
                .flat_map(|(i, m)| m.applicable(&current).into_iter().map(move |x| (i, x)))
                .filter_map(|(i, x)| {
                    let q = edit::apply(&current, &x).ok()?;
                    let fresh = print_program(&q) != text && discrepancies(&q, base).len() > before;
                    (check(&q).is_ok() && fresh).then_some((i, q))
                })
                .collect();
            let Some((i, q)) = options.choose(&mut rng).cloned() else { break };
            applied.push(ms[i]);
            current = q;
        }
        if applied.len() < n || is_correct(&current, task) || !seen.insert(print_program(&current)) {
            continue;
        }
        out.push(ComposedMutant {
            id: format!("{}-{bucket}-{attempt}", task.id),
            task: task.id,
            reference,
            mutators: applied.iter().map(|m| m.id.to_string()).collect(),
            classes: applied.iter().map(|m| m.class.to_string()).collect(),
            program: current,
        });
    }
    if out.len() < count {
        return Err(SynthError::InsufficientDiversity {
            task: task.id.to_string(),
            class: format!("composed {bucket}"),
            wanted: count,
            got: out.len(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub program_id: String,
    pub task: TaskId,
    pub errors: usize,
    pub method: String,
    pub found: bool,
    pub fix_size: usize,
    pub subsets_evaluated: u64,
    pub wall_ms: u128,
}

impl BenchmarkRow {
    pub fn new(mutant: &ComposedMutant, method: &str, outcome: &RepairOutcome) -> Self {
        BenchmarkRow {
            program_id: mutant.id.clone(),
            task: mutant.task,
            errors: mutant.errors(),
            method: method.to_string(),
            found: outcome.found(),
            fix_size: outcome.fix_size(),
            subsets_evaluated: outcome.stats.subsets_evaluated,
            wall_ms: outcome.stats.wall.as_millis(),
        }
    }
}

pub const BENCHMARK_HEADER: &str = "program_id,task,errors,method,found,fix_size,subsets_evaluated,wall_ms";

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut s = format!("{BENCHMARK_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.program_id, r.task, r.errors, r.method, r.found, r.fix_size, r.subsets_evaluated, r.wall_ms
        );
    }
    s
}
