//! Campaign configuration file.
//!
//! TOML, one table per block. Every key is optional except the seeds of the
//! blocks a command draws random numbers from; unknown keys are rejected.
//! Relative paths are resolved against the directory of the config file.
//!
//! ```toml
//! mode = "campaign"          # default mode of `pmsm-moo run`
//!
//! [spec]                     # design-space override
//! limits = { r_max = 120.0 } # any GeometryLimits field
//! # params = [...]          # full list of 14 parameters, same names and order
//!
//! [sampling]
//! n_lhs = 2500               # geometry-feasible designs in the dataset
//! seed = 1
//! max_resample_rounds = 100
//!
//! [training]
//! seed = 2
//! test_holdout = 500         # records held out for testing, never trained on
//! max_epochs = 500
//! batch_size = 32
//! learning_rate = 1e-3
//! validation_fraction = 0.2
//! patience = 50
//!
//! [optimizer]
//! seed = 3
//! population_size = 64
//! max_generations = 100
//! crossover_probability = 0.9
//! eta_c = 15.0
//! mutation_probability = 0.0714285714285714
//! eta_m = 20.0
//! integer_reset_probability = 0.1
//! convergence = true
//! convergence_window = 10
//! convergence_threshold = 1e-3
//!
//! [benchmark]
//! suite = "zdt1"             # zdt1 | zdt2 | constrained-demo
//! n_vars = 30
//!
//! [paths]
//! results = "results"
//! # dataset = "results/dataset.csv"
//! # model = "results/model.bin"
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pmsm_moo::design_space::{DesignSpec, GeometryLimits, ParamSpec};
use pmsm_moo::optimizer::OptimizerConfig;
use pmsm_moo::surrogate::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Dataset,
    Train,
    OptimizeClassical,
    OptimizeHybrid,
    OptimizeFactor2,
    Compare,
    Benchmark,
    PredictPlot,
    /// Dataset, training, the three optimization runs, comparison and
    /// prediction plot in one go.
    Campaign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Classical,
    Hybrid,
    Factor2,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Classical, Variant::Hybrid, Variant::Factor2];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Classical => "classical",
            Variant::Hybrid => "hybrid",
            Variant::Factor2 => "factor2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Zdt1,
    Zdt2,
    ConstrainedDemo,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Zdt1 => "zdt1",
            Suite::Zdt2 => "zdt2",
            Suite::ConstrainedDemo => "constrained-demo",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecOverride {
    pub params: Option<Vec<ParamSpec>>,
    pub limits: Option<GeometryLimits>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingBlock {
    pub n_lhs: usize,
    pub seed: u64,
    pub max_resample_rounds: usize,
}

impl Default for SamplingBlock {
    fn default() -> Self {
        Self {
            n_lhs: 2500,
            seed: 0,
            max_resample_rounds: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingBlock {
    #[serde(default = "default_holdout")]
    pub test_holdout: usize,
    #[serde(flatten)]
    pub train: TrainConfig,
}

fn default_holdout() -> usize {
    500
}

impl Default for TrainingBlock {
    fn default() -> Self {
        Self {
            test_holdout: default_holdout(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkBlock {
    pub suite: Suite,
    pub n_vars: usize,
    /// Points on the analytic front used for generational distance.
    pub truth_samples: usize,
}

impl Default for BenchmarkBlock {
    fn default() -> Self {
        Self {
            suite: Suite::Zdt1,
            n_vars: 30,
            truth_samples: 10_001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsBlock {
    pub results: PathBuf,
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl Default for PathsBlock {
    fn default() -> Self {
        Self {
            results: PathBuf::from("results"),
            dataset: None,
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub mode: Option<Mode>,
    pub spec: SpecOverride,
    pub sampling: SamplingBlock,
    pub training: TrainingBlock,
    pub optimizer: OptimizerConfig,
    pub benchmark: BenchmarkBlock,
    pub paths: PathsBlock,
    /// Blocks whose seed was given explicitly.
    #[serde(skip)]
    pub seeded: BTreeSet<String>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// The parts of a config that determine artifact contents.
#[derive(Serialize)]
struct Hashed<'a> {
    spec: &'a DesignSpec,
    sampling: &'a SamplingBlock,
    training: &'a TrainingBlock,
    optimizer: &'a OptimizerConfig,
    benchmark: &'a BenchmarkBlock,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

const SEEDED_BLOCKS: [&str; 3] = ["sampling", "training", "optimizer"];

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut cfg: CampaignConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let known = serde_json::to_value(&cfg).map_err(|e| CliError::Internal(e.to_string()))?;
        let raw_json = serde_json::to_value(&raw).map_err(|e| CliError::Internal(e.to_string()))?;
        if let Some(key) = unknown_key(&raw_json, &known, "") {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        cfg.seeded = SEEDED_BLOCKS
            .iter()
            .filter(|b| raw.get(**b).and_then(|t| t.get("seed")).is_some())
            .map(|b| b.to_string())
            .collect();
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let spec = self.design_spec();
        spec.validate()?;
        let reference = DesignSpec::double_v();
        let names = |s: &DesignSpec| s.params.iter().map(|p| p.name.clone()).collect::<Vec<_>>();
        if names(&spec) != names(&reference) || spec.params.iter().zip(&reference.params).any(|(a, b)| a.kind != b.kind) {
            return Err(CliError::Config(
                "spec.params must list the 14 machine parameters in their standard order and kinds".into(),
            ));
        }
        self.training.train.validate()?;
        self.optimizer.validate()?;
        if self.sampling.n_lhs == 0 {
            return Err(CliError::Config("sampling.n_lhs must be at least 1".into()));
        }
        if self.benchmark.n_vars < 2 || self.benchmark.truth_samples < 2 {
            return Err(CliError::Config("benchmark.n_vars and truth_samples must be at least 2".into()));
        }
        Ok(())
    }

    /// Fails unless `[block]` set its seed explicitly.
    pub fn require_seed(&self, block: &str) -> Result<(), CliError> {
        if self.seeded.contains(block) {
            Ok(())
        } else {
            Err(CliError::Config(format!("{block}.seed must be set explicitly")))
        }
    }

    /// Marks every block as explicitly seeded; for configs built in code.
    pub fn with_all_seeds(mut self) -> Self {
        self.seeded = SEEDED_BLOCKS.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn design_spec(&self) -> DesignSpec {
        let mut spec = DesignSpec::double_v();
        if let Some(p) = &self.spec.params {
            spec.params = p.clone();
        }
        if let Some(l) = self.spec.limits {
            spec.limits = l;
        }
        spec
    }

    /// SHA-256 of the content-determining blocks (not the mode or paths).
    pub fn hash(&self) -> String {
        let h = Hashed {
            spec: &self.design_spec(),
            sampling: &self.sampling,
            training: &self.training,
            optimizer: &self.optimizer,
            benchmark: &self.benchmark,
        };
        sha256_hex(&serde_json::to_vec(&h).expect("config serializes"))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn results_dir(&self) -> PathBuf {
        self.resolve(&self.paths.results)
    }

    pub fn dataset_path(&self) -> PathBuf {
        match &self.paths.dataset {
            Some(p) => self.resolve(p),
            None => self.results_dir().join("dataset.csv"),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        match &self.paths.model {
            Some(p) => self.resolve(p),
            None => self.results_dir().join("model.bin"),
        }
    }

    pub fn bundle_dir(&self, v: Variant) -> PathBuf {
        self.results_dir().join(v.as_str())
    }
}

/// First key path present in `raw` but absent from `known`.
fn unknown_key(raw: &serde_json::Value, known: &serde_json::Value, prefix: &str) -> Option<String> {
    let (serde_json::Value::Object(r), serde_json::Value::Object(k)) = (raw, known) else {
        return None;
    };
    for (key, value) in r {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match k.get(key) {
            None => return Some(path),
            Some(kv) => {
                if let Some(found) = unknown_key(value, kv, &path) {
                    return Some(found);
                }
            }
        }
    }
    None
}
