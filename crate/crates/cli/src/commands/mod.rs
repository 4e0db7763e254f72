//! One function per CLI command. Each reads its inputs from the paths in
//! the config, verifies their hashes and writes its outputs atomically.

pub mod benchmark;
pub mod compare;
pub mod dataset;
pub mod optimize;
pub mod predict_plot;
pub mod train;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use benchmark::{cmd_benchmark, BenchmarkReport};
pub use compare::{cmd_compare, CompareReport};
pub use dataset::{cmd_dataset, load_dataset};
pub use optimize::{cmd_optimize, Bundle, RunManifest, TimingRecord};
pub use predict_plot::{cmd_predict_plot, PredictSummary};
pub use train::{cmd_train, load_model, TrainReport};

use crate::artifacts::DatasetMeta;
use crate::config::{CampaignConfig, Variant};
use crate::error::CliError;

pub fn compare_dir(cfg: &CampaignConfig, v: Variant) -> PathBuf {
    cfg.results_dir().join("compare").join(v.as_str())
}

pub fn predict_plot_dir(cfg: &CampaignConfig) -> PathBuf {
    cfg.results_dir().join("predict-plot")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub dataset: DatasetMeta,
    pub training: TrainReport,
    pub runs: Vec<RunManifest>,
    /// Classical against hybrid, then classical against factor2.
    pub comparisons: Vec<CompareReport>,
    pub prediction: PredictSummary,
}

/// Dataset, training, classical/hybrid/factor2 runs, both comparisons
/// against the classical run and the prediction plot of the hybrid front.
pub fn cmd_campaign(cfg: &CampaignConfig, progress: &dyn Fn(&str)) -> Result<CampaignSummary, CliError> {
    for block in ["sampling", "training", "optimizer"] {
        cfg.require_seed(block)?;
    }
    progress("dataset");
    let dataset = cmd_dataset(cfg)?;
    progress("train");
    let training = cmd_train(cfg)?;
    let mut runs = Vec::new();
    for v in Variant::ALL {
        progress(&format!("optimize {v}"));
        runs.push(cmd_optimize(cfg, v)?);
    }
    progress("compare");
    let classical = cfg.bundle_dir(Variant::Classical);
    let comparisons = [Variant::Hybrid, Variant::Factor2]
        .into_iter()
        .map(|v| cmd_compare(cfg, &classical, &cfg.bundle_dir(v), &compare_dir(cfg, v)))
        .collect::<Result<Vec<_>, _>>()?;
    progress("predict-plot");
    let prediction = cmd_predict_plot(cfg, &cfg.bundle_dir(Variant::Hybrid), &predict_plot_dir(cfg))?;
    Ok(CampaignSummary {
        dataset,
        training,
        runs,
        comparisons,
        prediction,
    })
}
