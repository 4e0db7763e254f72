use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pmsm_moo::design_space::DesignSpec;
use pmsm_moo::error::OptimizerError;
use pmsm_moo::evaluator::{ClassicalProblem, HybridProblem};
use pmsm_moo::optimizer::{run, EvaluatedDesign, EvaluatorTag, GenerationStats, OptResult, OptimizerConfig};
use serde::{Deserialize, Serialize};

use super::train::load_model;
use crate::artifacts::{
    archive_csv, history_csv, kpi_hash, parse_archive, parse_history, read_json, verify_digest, write_atomic,
    write_json, FrontEntry, TOOL_VERSION,
};
use crate::config::{sha256_hex, CampaignConfig, Variant};
use crate::error::CliError;

pub const ARCHIVE: &str = "archive.csv";
pub const FRONT: &str = "front.json";
pub const HISTORY: &str = "history.csv";
pub const TIMING: &str = "timing.json";
pub const MANIFEST: &str = "run.json";

/// Deterministic description of a result bundle. Wall-clock figures live in
/// the separate timing record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub spec_hash: String,
    pub kpi_hash: String,
    pub variant: Variant,
    pub evaluator: EvaluatorTag,
    pub seed: u64,
    pub reference_point: Option<[f64; 2]>,
    pub evaluations: usize,
    pub physics_evaluations: usize,
    pub generations: usize,
    pub converged: bool,
    pub evaluation_budget: Option<usize>,
    pub model_sha256: Option<String>,
    /// Evaluation count of the hybrid run a factor2 run was paired with.
    pub paired_evaluations: Option<usize>,
    /// False when the run stopped on an evaluator failure.
    pub complete: bool,
    pub error: Option<String>,
    /// SHA-256 of every bundle file.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub evaluations: usize,
    pub physics_evaluations: usize,
    /// Summed wall-clock time of all evaluations.
    pub evaluation_seconds: f64,
    pub seconds_per_evaluation: f64,
    /// Evaluation time divided by the evaluations that reached the physics;
    /// geometry-rejected designs cost next to nothing.
    pub seconds_per_physics_evaluation: f64,
    pub measure_seconds: f64,
    pub postprocess_seconds: f64,
    pub overhead_seconds: f64,
    pub total_seconds: f64,
}

impl TimingRecord {
    fn of(r: &OptResult) -> Self {
        let t = &r.timing;
        let per = |n: usize| if n == 0 { 0.0 } else { t.evaluation_seconds / n as f64 };
        Self {
            evaluations: r.evaluations,
            physics_evaluations: r.physics_evaluations,
            evaluation_seconds: t.evaluation_seconds,
            seconds_per_evaluation: per(r.evaluations),
            seconds_per_physics_evaluation: per(r.physics_evaluations),
            measure_seconds: t.measure_seconds,
            postprocess_seconds: t.postprocess_seconds,
            overhead_seconds: t.overhead_seconds,
            total_seconds: t.total_seconds,
        }
    }
}

/// A result bundle read back from disk, hashes verified.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub front: Vec<FrontEntry>,
    pub history: Vec<GenerationStats>,
}

impl Bundle {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let manifest: RunManifest = read_json(&dir.join(MANIFEST))?;
        let file = |name: &str| -> Result<Vec<u8>, CliError> {
            let digest = manifest
                .files
                .get(name)
                .ok_or_else(|| CliError::format(&dir.join(MANIFEST), format!("no digest for {name}")))?;
            verify_digest(&dir.join(name), digest)
        };
        let front = serde_json::from_slice(&file(FRONT)?)
            .map_err(|e| CliError::format(&dir.join(FRONT), e.to_string()))?;
        let history = parse_history(&dir.join(HISTORY), &file(HISTORY)?)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            front,
            history,
        })
    }

    pub fn archive(&self, spec: &DesignSpec) -> Result<Vec<EvaluatedDesign>, CliError> {
        let path = self.dir.join(ARCHIVE);
        let digest = self.manifest.files.get(ARCHIVE).cloned().unwrap_or_default();
        parse_archive(&path, &verify_digest(&path, &digest)?, spec)
    }

    pub fn timing(&self) -> Result<TimingRecord, CliError> {
        read_json(&self.dir.join(TIMING))
    }
}

/// The campaign's hypervolume reference point: the worst feasible KPIs of
/// the generation-0 population under the reference model, widened by 10 %.
/// Every variant starts from this population, so all runs share the point.
pub fn campaign_reference(cfg: &CampaignConfig) -> Result<Option<[f64; 2]>, CliError> {
    if let Some(r) = cfg.optimizer.reference_point {
        return Ok(Some(r));
    }
    let probe = OptimizerConfig {
        max_generations: 0,
        evaluation_budget: None,
        convergence: false,
        ..cfg.optimizer.clone()
    };
    Ok(run(&probe, &ClassicalProblem::classical(cfg.design_spec()))?.reference_point)
}

/// Runs one optimization variant and writes its result bundle. On an
/// evaluator failure the partial bundle is written before the error is
/// returned.
pub fn cmd_optimize(cfg: &CampaignConfig, variant: Variant) -> Result<RunManifest, CliError> {
    cfg.require_seed("optimizer")?;
    let spec = cfg.design_spec();
    let mut oc = cfg.optimizer.clone();
    oc.reference_point = campaign_reference(cfg)?;
    let mut paired = None;
    if variant == Variant::Factor2 {
        match read_json::<RunManifest>(&cfg.bundle_dir(Variant::Hybrid).join(MANIFEST)) {
            Ok(h) => {
                if h.config_hash != cfg.hash() {
                    return Err(CliError::Mismatch(
                        "the hybrid bundle was produced from a different config".into(),
                    ));
                }
                oc.convergence = false;
                oc.evaluation_budget = Some(2 * h.evaluations);
                paired = Some(h.evaluations);
            }
            Err(CliError::Io { .. }) => oc.budget_multiplier = 2,
            Err(e) => return Err(e),
        }
    }

    let (outcome, model_sha256) = match variant {
        Variant::Classical => (run(&oc, &ClassicalProblem::classical(spec.clone())), None),
        Variant::Hybrid | Variant::Factor2 => {
            let (model, meta) = load_model(cfg)?;
            (run(&oc, &HybridProblem::hybrid(spec.clone(), model)), Some(meta.sha256))
        }
    };
    let (result, error) = match outcome {
        Ok(r) => (r, None),
        Err(OptimizerError::EvaluatorFailure { message, partial }) => (*partial, Some(message)),
        Err(e) => return Err(e.into()),
    };

    let dir = cfg.bundle_dir(variant);
    let mut files = BTreeMap::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), CliError> {
        files.insert(name.to_string(), sha256_hex(&bytes));
        write_atomic(&dir.join(name), &bytes)
    };
    put(ARCHIVE, archive_csv(&spec, result.archive.members())?)?;
    let front: Vec<FrontEntry> = result.front.iter().map(FrontEntry::of).collect();
    let mut front_bytes = serde_json::to_vec_pretty(&front).map_err(|e| CliError::Internal(e.to_string()))?;
    front_bytes.push(b'\n');
    put(FRONT, front_bytes)?;
    put(HISTORY, history_csv(&result.history)?)?;
    write_json(&dir.join(TIMING), &TimingRecord::of(&result))?;

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        spec_hash: spec.hash(),
        kpi_hash: kpi_hash(&spec),
        variant,
        evaluator: match variant {
            Variant::Classical => EvaluatorTag::Reference,
            _ => EvaluatorTag::Surrogate,
        },
        seed: oc.seed,
        reference_point: result.reference_point,
        evaluations: result.evaluations,
        physics_evaluations: result.physics_evaluations,
        generations: result.generations,
        converged: result.converged,
        evaluation_budget: oc.evaluation_budget,
        model_sha256,
        paired_evaluations: paired,
        complete: error.is_none(),
        error: error.clone(),
        files,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    if let Some(message) = error {
        return Err(CliError::Internal(format!(
            "{variant} run stopped after {} evaluations: {message}; partial bundle written to {}",
            manifest.evaluations,
            dir.display()
        )));
    }
    if let Some(p) = paired {
        if manifest.evaluations != 2 * p {
            return Err(CliError::Internal(format!(
                "factor2 ran {} evaluations, expected {}",
                manifest.evaluations,
                2 * p
            )));
        }
    }
    Ok(manifest)
}
