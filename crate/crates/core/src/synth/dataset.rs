//! Labelled single-error datasets with precomputed traces.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mutators::{self, Mutation};
use super::tasks::{load_task, Task, TaskId};
use super::variants;
use super::SynthError;
use crate::edit;
use crate::encoding::canon::{CanonicalModel, CanonicalRenaming, DEFAULT_TOP_VARIABLES};
use crate::encoding::views::{record_traces, DepEvent, StateTraceView, VariableTraceView, DEFAULT_TRACE_CAP};
use crate::encoding::vocab::{Vocabulary, DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT};
use crate::minilang::{parse, print_program, Program, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, SynthError> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(SynthError::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTraces {
    pub variable: VariableTraceView,
    pub state: StateTraceView,
    pub deps: Vec<DepEvent>,
    pub executed: Vec<String>,
    pub truncated: bool,
    /// Canonical names (V1.., VOTHER) of the written variables.
    pub canonical: CanonicalRenaming,
}

/// Where a record came from: the reference it was derived from and the
/// mutant before any surface rewriting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub reference: usize,
    pub mutator: String,
    pub mutant: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub source: String,
    pub task: TaskId,
    pub label: String,
    pub traces: RecordTraces,
    pub split: Split,
    pub vocab_hash: String,
    pub origin: Origin,
}

impl DatasetRecord {
    pub fn program(&self) -> Program {
        parse(&self.source).expect("dataset sources parse")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub task: TaskId,
    /// Programs per error class, in catalog order.
    pub counts: Vec<usize>,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub trace_cap: usize,
    #[serde(default = "default_top")]
    pub top_variables: usize,
    #[serde(default = "default_max_size")]
    pub vocab_max_size: usize,
    #[serde(default = "default_min_count")]
    pub vocab_min_count: usize,
    /// Generation attempts allowed per requested program.
    #[serde(default = "default_attempts")]
    pub attempts_per_record: usize,
}

fn default_cap() -> usize {
    DEFAULT_TRACE_CAP
}
fn default_top() -> usize {
    DEFAULT_TOP_VARIABLES
}
fn default_max_size() -> usize {
    DEFAULT_MAX_SIZE
}
fn default_min_count() -> usize {
    DEFAULT_MIN_COUNT
}
fn default_attempts() -> usize {
    20
}

impl DatasetConfig {
    pub fn new(task: TaskId, per_class: usize, seed: u64) -> Self {
        let classes = load_task(task).classes.len();
        Self::with_counts(task, vec![per_class; classes], seed)
    }

    /// `total` programs spread as evenly as possible over the classes, the
    /// first classes taking the remainder.
    pub fn with_total(task: TaskId, total: usize, seed: u64) -> Self {
        let c = load_task(task).classes.len();
        let counts = (0..c).map(|i| total / c + usize::from(i < total % c)).collect();
        Self::with_counts(task, counts, seed)
    }

    pub fn with_counts(task: TaskId, counts: Vec<usize>, seed: u64) -> Self {
        DatasetConfig {
            task,
            counts,
            split: [0.8, 0.1, 0.1],
            seed,
            trace_cap: DEFAULT_TRACE_CAP,
            top_variables: DEFAULT_TOP_VARIABLES,
            vocab_max_size: DEFAULT_MAX_SIZE,
            vocab_min_count: DEFAULT_MIN_COUNT,
            attempts_per_record: default_attempts(),
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.counts.len() != load_task(self.task).classes.len() {
            return bad("need one count per error class");
        }
        if self.counts.contains(&0) {
            return bad("every class needs at least one program");
        }
        if self.split.iter().any(|r| !(0.0..=1.0).contains(r)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("split ratios must be in [0, 1] and sum to 1");
        }
        if self.trace_cap == 0 || self.top_variables == 0 {
            return bad("trace_cap and top_variables must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub records: Vec<DatasetRecord>,
    pub vocab: Vocabulary,
    pub canonical: CanonicalModel,
}

impl Dataset {
    pub fn split(&self, s: Split) -> Vec<&DatasetRecord> {
        self.records.iter().filter(|r| r.split == s).collect()
    }

    pub fn counts(&self) -> BTreeMap<String, BTreeMap<String, usize>> {
        let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for r in &self.records {
            *out.entry(r.split.to_string())
                .or_default()
                .entry(r.label.clone())
                .or_default() += 1;
        }
        out
    }
}

/// Seed derived from the run seed and a path of labels.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

fn record_id(task: TaskId, label: &str, source: &str) -> String {
    let mut h = Sha256::new();
    for part in [task.as_str(), label, source] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Every (reference, mutator id, mutation) option for one class.
pub fn class_options(task: &Task, class: usize) -> Vec<Vec<(&'static str, Mutation)>> {
    let ms = mutators::mutators_for_class(task, class);
    task.references
        .iter()
        .map(|r| {
            ms.iter()
                .flat_map(|m| m.applicable(r).into_iter().map(move |x| (m.id, x)))
                .collect()
        })
        .collect()
}

struct Draft {
    source: String,
    class: usize,
    origin: Origin,
}

fn draft_class(
    task: &Task,
    config: &DatasetConfig,
    class: usize,
    behavior_inputs: &[Vec<Value>],
    seen: &mut HashSet<String>,
) -> Result<Vec<Draft>, SynthError> {
    let name = task.classes[class].name;
    let options = class_options(task, class);
    let usable: Vec<usize> = (0..options.len()).filter(|&r| !options[r].is_empty()).collect();
    let wanted = config.counts[class];
    let mut out = Vec::new();
    let budget = wanted * config.attempts_per_record;
    for attempt in 0..budget {
        if out.len() == wanted {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            config.seed,
            &[task.id.as_str(), name, &attempt.to_string()],
        ));
        let Some(&r) = usable.choose(&mut rng) else { break };
        let (mid, mutation) = &options[r][rng.gen_range(0..options[r].len())];
        let mutant = edit::apply(&task.references[r], mutation).map_err(|e| SynthError::Internal(e.to_string()))?;
        if task.passes(&mutant) {
            continue;
        }
        let variant = variants::vary(&mutant, behavior_inputs, &mut rng);
        let source = print_program(&variant);
        if !seen.insert(source.clone()) {
            continue;
        }
        out.push(Draft {
            source,
            class,
            origin: Origin {
                reference: r,
                mutator: mid.to_string(),
                mutant: print_program(&mutant),
            },
        });
    }
    if out.len() < wanted {
        return Err(SynthError::InsufficientDiversity {
            task: task.id.to_string(),
            class: name.to_string(),
            wanted,
            got: out.len(),
        });
    }
    Ok(out)
}

/// Per-class split sizes. Split totals are `round(N * ratio)` for train
/// and validation (test takes the rest); each class gets the floor of its
/// share and leftover slots go to the largest fractional remainders, ties
/// to the earlier class.
pub fn stratified_split_sizes(counts: &[usize], ratios: [f64; 3]) -> Vec<[usize; 3]> {
    let n: usize = counts.iter().sum();
    let mut out = vec![[0usize; 3]; counts.len()];
    let mut left: Vec<usize> = counts.to_vec();
    for s in 0..2 {
        let target = (((n as f64) * ratios[s]).round() as usize).min(left.iter().sum());
        let share: Vec<f64> = counts.iter().map(|&c| c as f64 * ratios[s]).collect();
        let mut given = 0;
        for (c, q) in share.iter().enumerate() {
            let k = (q.floor() as usize).min(left[c]);
            out[c][s] = k;
            given += k;
        }
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = share[a] - share[a].floor();
            let fb = share[b] - share[b].floor();
            fb.partial_cmp(&fa).expect("finite").then(a.cmp(&b))
        });
        for c in order.into_iter().cycle().take(counts.len() * 2) {
            if given >= target {
                break;
            }
            if out[c][s] < left[c] {
                out[c][s] += 1;
                given += 1;
            }
        }
        for c in 0..counts.len() {
            left[c] -= out[c][s];
        }
    }
    for c in 0..counts.len() {
        out[c][2] = left[c];
    }
    out
}

pub fn generate_dataset(config: &DatasetConfig) -> Result<Dataset, SynthError> {
    config.validate()?;
    let task = load_task(config.task);
    let behavior_inputs: Vec<Vec<Value>> = task
        .tests
        .iter()
        .map(|t| t.inputs.clone())
        .chain(task.trace_inputs.iter().cloned())
        .collect();
    let mut seen: HashSet<String> = task.references.iter().map(print_program).collect();

    let sizes = stratified_split_sizes(&config.counts, config.split);
    let mut drafts: Vec<(Draft, Split)> = Vec::new();
    for (class, &[train, val, _]) in sizes.iter().enumerate() {
        let class_drafts = draft_class(&task, config, class, &behavior_inputs, &mut seen)?;
        let mut order: Vec<usize> = (0..class_drafts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            config.seed,
            &[task.id.as_str(), task.classes[class].name, "split"],
        ));
        order.shuffle(&mut rng);
        let mut splits = vec![Split::Test; class_drafts.len()];
        for (rank, &i) in order.iter().enumerate() {
            splits[i] = if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Validation
            } else {
                Split::Test
            };
        }
        drafts.extend(class_drafts.into_iter().zip(splits));
    }

    let traces: Vec<_> = drafts
        .iter()
        .map(|(d, _)| {
            let p = parse(&d.source).expect("printed programs parse");
            record_traces(&p, &task.trace_inputs, config.trace_cap)
        })
        .collect();

    let train_views: Vec<&VariableTraceView> = drafts
        .iter()
        .zip(&traces)
        .filter(|((_, s), _)| *s == Split::Train)
        .map(|(_, t)| &t.variable)
        .collect();
    let canonical = CanonicalModel::fit(&train_views, config.top_variables);
    let vocab = Vocabulary::build(
        train_views.iter().flat_map(|v| v.vars.iter().flat_map(|x| x.tokens.iter().map(String::as_str))),
        config.vocab_max_size,
        config.vocab_min_count,
    )
    .map_err(|e| SynthError::Internal(e.to_string()))?;
    let vocab_hash = vocab.hash();

    let mut records: Vec<DatasetRecord> = drafts
        .into_iter()
        .zip(traces)
        .map(|((d, split), t)| {
            let label = task.classes[d.class].name.to_string();
            DatasetRecord {
                id: record_id(task.id, &label, &d.source),
                traces: RecordTraces {
                    canonical: canonical.assign(&t.variable),
                    variable: t.variable,
                    state: t.state,
                    deps: t.deps,
                    executed: t.executed,
                    truncated: t.truncated,
                },
                source: d.source,
                task: task.id,
                label,
                split,
                vocab_hash: vocab_hash.clone(),
                origin: d.origin,
            }
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Dataset {
        config: config.clone(),
        records,
        vocab,
        canonical,
    })
}

pub fn write_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<(), SynthError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| SynthError::Internal(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, SynthError> {
    let r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| SynthError::InvalidConfig(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub const RECORDS_FILE: &str = "dataset.jsonl";
pub const VOCAB_FILE: &str = "vocab.json";
pub const CANONICAL_FILE: &str = "canonical.json";
pub const CONFIG_FILE: &str = "dataset_config.json";

fn to_pretty<T: Serialize>(x: &T) -> Result<String, SynthError> {
    serde_json::to_string_pretty(x).map_err(|e| SynthError::Internal(e.to_string()))
}

/// Write the records, vocabulary, canonical medoids and generation config
/// into `dir`. Returns the written paths.
pub fn save_dataset(dir: &Path, d: &Dataset) -> Result<Vec<PathBuf>, SynthError> {
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = [RECORDS_FILE, VOCAB_FILE, CANONICAL_FILE, CONFIG_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_jsonl(&paths[0], &d.records)?;
    std::fs::write(&paths[1], d.vocab.to_json() + "\n")?;
    std::fs::write(&paths[2], to_pretty(&d.canonical)? + "\n")?;
    std::fs::write(&paths[3], to_pretty(&d.config)? + "\n")?;
    Ok(paths)
}

/// Inverse of [`save_dataset`]. Every record must refer to the stored
/// vocabulary.
pub fn load_dataset(dir: &Path) -> Result<Dataset, SynthError> {
    let read = |f: &str| std::fs::read_to_string(dir.join(f));
    let bad = |f: &str, e: &dyn fmt::Display| SynthError::InvalidConfig(format!("{}: {e}", dir.join(f).display()));
    let config: DatasetConfig = serde_json::from_str(&read(CONFIG_FILE)?).map_err(|e| bad(CONFIG_FILE, &e))?;
    let canonical: CanonicalModel =
        serde_json::from_str(&read(CANONICAL_FILE)?).map_err(|e| bad(CANONICAL_FILE, &e))?;
    let vocab = Vocabulary::from_json(&read(VOCAB_FILE)?).map_err(|e| bad(VOCAB_FILE, &e))?;
    let records = read_jsonl(&dir.join(RECORDS_FILE))?;
    let hash = vocab.hash();
    if let Some(r) = records.iter().find(|r| r.vocab_hash != hash || r.task != config.task) {
        return Err(bad(RECORDS_FILE, &format!("record {} does not belong to this vocabulary and task", r.id)));
    }
    Ok(Dataset {
        config,
        records,
        vocab,
        canonical,
    })
}
