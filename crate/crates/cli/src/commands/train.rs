use std::path::PathBuf;
use std::time::Instant;

use pmsm_moo::surrogate::persist::{from_bytes, to_bytes};
use pmsm_moo::surrogate::{evaluate_model, partition, train, MetaModel, ModelMetrics, Split, TrainingMeta};
use serde::{Deserialize, Serialize};

use super::dataset::load_dataset;
use crate::artifacts::{read_json, sidecar, verify_digest, write_atomic, write_json, ModelMeta, TOOL_VERSION};
use crate::config::{sha256_hex, CampaignConfig};
use crate::error::CliError;

pub const META_SUFFIX: &str = ".meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub tool_version: String,
    pub config_hash: String,
    pub spec_hash: String,
    pub dataset_sha256: String,
    pub model_sha256: String,
    pub n_records: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub training: TrainingMeta,
    pub validation: ModelMetrics,
    /// Metrics on the held-out test slice, when one is configured.
    pub test: Option<ModelMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainTiming {
    pub train_seconds: f64,
    pub metrics_seconds: f64,
}

pub fn training_dir(cfg: &CampaignConfig) -> PathBuf {
    cfg.results_dir().join("training")
}

/// Trains the surrogate on the configured dataset and writes the model, its
/// sidecar, a metrics report and a timing record.
pub fn cmd_train(cfg: &CampaignConfig) -> Result<TrainReport, CliError> {
    cfg.require_seed("training")?;
    let spec = cfg.design_spec();
    let (mut ds, dmeta) = load_dataset(cfg)?;
    let tc = &cfg.training.train;
    if cfg.training.test_holdout > 0 {
        if cfg.training.test_holdout >= ds.len() {
            return Err(CliError::Config(format!(
                "training.test_holdout = {} leaves no training data in {} records",
                cfg.training.test_holdout,
                ds.len()
            )));
        }
        ds.hold_out(cfg.training.test_holdout, tc.seed);
    }

    let t = Instant::now();
    let model = train(&ds, &spec, tc)?;
    let train_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (_, va) = partition(&ds, tc);
    let validation = evaluate_model(&model, va.iter().map(|&i| &ds.records[i]), &spec.limits);
    let n_test = ds.with_split(Split::Test).count();
    let test = (n_test > 0).then(|| evaluate_model(&model, ds.with_split(Split::Test), &spec.limits));
    let metrics_seconds = t.elapsed().as_secs_f64();

    let bytes = to_bytes(&model);
    let path = cfg.model_path();
    write_atomic(&path, &bytes)?;
    let model_sha256 = sha256_hex(&bytes);
    let meta = ModelMeta {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        spec_hash: spec.hash(),
        dataset_sha256: dmeta.sha256.clone(),
        sha256: model_sha256.clone(),
    };
    write_json(&sidecar(&path, META_SUFFIX), &meta)?;

    let report = TrainReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        spec_hash: spec.hash(),
        dataset_sha256: dmeta.sha256,
        model_sha256,
        n_records: ds.len(),
        n_train: model.meta.n_train,
        n_validation: model.meta.n_validation,
        n_test,
        training: model.meta.clone(),
        validation,
        test,
    };
    let dir = training_dir(cfg);
    write_json(&dir.join("metrics.json"), &report)?;
    write_json(&dir.join("timing.json"), &TrainTiming { train_seconds, metrics_seconds })?;
    Ok(report)
}

/// Reads the configured model after checking its sidecar, content hash and
/// design space.
pub fn load_model(cfg: &CampaignConfig) -> Result<(MetaModel, ModelMeta), CliError> {
    let spec = cfg.design_spec();
    let path = cfg.model_path();
    let meta: ModelMeta = read_json(&sidecar(&path, META_SUFFIX))?;
    let bytes = verify_digest(&path, &meta.sha256)?;
    let model = from_bytes(&bytes).map_err(|e| CliError::format(&path, e.to_string()))?;
    if model.spec_hash != spec.hash() || meta.spec_hash != spec.hash() {
        return Err(CliError::Mismatch(format!(
            "model {} was trained for design spec {}, config has {}",
            path.display(),
            model.spec_hash,
            spec.hash()
        )));
    }
    Ok((model, meta))
}
