//! Experiment configuration: one JSON file per experiment, with command-line
//! flags layered on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dpe::models::{Architecture, ModelConfig};
use dpe::repair::{DEFAULT_BUDGET, DEFAULT_CANDIDATES, DEFAULT_MAX_ROUNDS};
use dpe::synth::dataset::DatasetConfig;
use dpe::synth::tasks::TaskId;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SEED_ENV: &str = "DPE_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Small encoders that train on one core in minutes.
    Desk,
    /// 100-dim embeddings, 2×200 trace encoder.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Programs per task, spread evenly over the error classes.
    pub total: usize,
    /// Programs per error class; takes precedence over `total`.
    pub per_class: Option<usize>,
    pub split: [f64; 3],
    pub trace_cap: Option<usize>,
    pub top_variables: Option<usize>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            total: 2500,
            per_class: None,
            split: [0.8, 0.1, 0.1],
            trace_cap: None,
            top_variables: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Enum,
    Guided,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Enum => "enum",
            Method::Guided => "guided",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepairSection {
    /// Inclusive ranges of injected errors.
    pub buckets: Vec<[usize; 2]>,
    pub per_bucket: usize,
    pub budget: u64,
    pub max_rounds: usize,
    pub candidates: usize,
    pub methods: Vec<Method>,
    /// Architecture of the checkpoint that guides the search.
    pub guide: Architecture,
}

impl Default for RepairSection {
    fn default() -> Self {
        RepairSection {
            buckets: vec![[1, 2], [3, 5], [6, 7]],
            per_bucket: 100,
            budget: DEFAULT_BUDGET,
            max_rounds: DEFAULT_MAX_ROUNDS,
            candidates: DEFAULT_CANDIDATES,
            methods: vec![Method::Enum, Method::Guided],
            guide: Architecture::DependencyEnforcement,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tasks: Vec<TaskId>,
    pub architectures: Vec<Architecture>,
    pub preset: Preset,
    /// Fields of the model configuration to override, merged recursively
    /// over the preset (e.g. `{"epochs": 10, "optimizer": {"lr": 0.001}}`).
    pub model: Map<String, Value>,
    pub dataset: DataSection,
    pub repair: RepairSection,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            tasks: TaskId::ALL.to_vec(),
            architectures: Architecture::ALL.to_vec(),
            preset: Preset::Desk,
            model: Map::new(),
            dataset: DataSection::default(),
            repair: RepairSection::default(),
            seed: 0,
            output: PathBuf::from("runs/default"),
        }
    }
}

/// A loaded configuration and the exact bytes it came from.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub source: Option<PathBuf>,
    pub raw: String,
}

impl Loaded {
    pub fn read(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            let config = ExperimentConfig::default();
            let raw = serde_json::to_string_pretty(&config)? + "\n";
            return Ok(Loaded { config, source: None, raw });
        };
        let raw = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config = serde_json::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(Loaded {
            config,
            source: Some(path.to_path_buf()),
            raw,
        })
    }

    /// Copy the configuration verbatim into the output directory.
    pub fn copy_to_output(&self) -> Result<()> {
        std::fs::create_dir_all(&self.config.output)
            .with_context(|| format!("creating {}", self.config.output.display()))?;
        std::fs::write(self.config.output.join("config.json"), &self.raw)?;
        Ok(())
    }
}

/// Seed precedence: flag, then the environment, then the file.
pub fn resolve_seed(config: &mut ExperimentConfig, flag: Option<u64>) -> Result<()> {
    if let Some(s) = flag {
        config.seed = s;
    } else if let Ok(v) = std::env::var(SEED_ENV) {
        config.seed = v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned integer"))?;
    }
    Ok(())
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

impl ExperimentConfig {
    /// The preset for `arch` with the file's overrides applied. The model
    /// seed follows the experiment seed unless the overrides set one.
    pub fn model_config(&self, arch: Architecture) -> Result<ModelConfig> {
        let mut base = match self.preset {
            Preset::Desk => ModelConfig::desk(arch),
            Preset::Full => ModelConfig::full(arch),
        };
        base.seed = self.seed;
        let mut v = serde_json::to_value(&base)?;
        merge(&mut v, &Value::Object(self.model.clone()));
        let mut c: ModelConfig = serde_json::from_value(v).context("invalid model overrides")?;
        c.architecture = arch;
        c.validate()?;
        Ok(c)
    }

    pub fn dataset_config(&self, task: TaskId) -> DatasetConfig {
        let d = &self.dataset;
        let mut c = match d.per_class {
            Some(n) => DatasetConfig::new(task, n, self.seed),
            None => DatasetConfig::with_total(task, d.total, self.seed),
        };
        c.split = d.split;
        if let Some(x) = d.trace_cap {
            c.trace_cap = x;
        }
        if let Some(x) = d.top_variables {
            c.top_variables = x;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            bail!("no tasks selected");
        }
        if self.repair.buckets.iter().any(|[lo, hi]| *lo == 0 || lo > hi) {
            bail!("repair buckets must be ranges lo..=hi with 1 <= lo <= hi");
        }
        if self.repair.budget == 0 || self.repair.candidates == 0 {
            bail!("repair budget and candidate count must be positive");
        }
        Ok(())
    }

    pub fn data_dir(&self, task: TaskId) -> PathBuf {
        self.output.join("data").join(task.as_str())
    }

    pub fn model_dir(&self, task: TaskId, arch: Architecture) -> PathBuf {
        self.output.join("models").join(task.as_str()).join(arch.as_str())
    }

    pub fn eval_dir(&self, task: TaskId, arch: Architecture) -> PathBuf {
        self.output.join("eval").join(task.as_str()).join(arch.as_str())
    }

    pub fn repair_dir(&self, task: TaskId) -> PathBuf {
        self.output.join("repair").join(task.as_str())
    }
}
