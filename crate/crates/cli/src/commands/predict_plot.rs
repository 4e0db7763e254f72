use std::path::Path;

use pmsm_moo::design_space::DesignVector;
use pmsm_moo::machine_model::evaluate_measures;
use pmsm_moo::optimizer::EvaluatorTag;
use pmsm_moo::postprocess::evaluate_kpis;
use pmsm_moo::surrogate::metrics::scalar_metrics;
use pmsm_moo::surrogate::RegressionMetrics;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::Bundle;
use crate::artifacts::{write_atomic, write_json, TOOL_VERSION};
use crate::config::CampaignConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictSummary {
    pub tool_version: String,
    pub config_hash: String,
    pub rows: usize,
    pub max_power: RegressionMetrics,
    pub cost: RegressionMetrics,
    /// Front designs that also satisfy every constraint under the reference
    /// model.
    pub reference_feasible: usize,
}

/// Re-evaluates every design of a surrogate front with the reference model
/// and writes predicted/reference KPI pairs plus an accuracy summary.
pub fn cmd_predict_plot(cfg: &CampaignConfig, bundle_dir: &Path, out: &Path) -> Result<PredictSummary, CliError> {
    let bundle = Bundle::load(bundle_dir)?;
    if bundle.manifest.evaluator != EvaluatorTag::Surrogate
        || bundle.front.iter().any(|e| e.evaluator != EvaluatorTag::Surrogate)
    {
        return Err(CliError::Mismatch(format!(
            "{} is not a surrogate-evaluated bundle",
            bundle_dir.display()
        )));
    }
    let spec = cfg.design_spec();
    if bundle.manifest.spec_hash != spec.hash() {
        return Err(CliError::Mismatch("bundle and config use different design specs".into()));
    }
    let reference: Vec<_> = bundle
        .front
        .par_iter()
        .map(|e| {
            let v = DesignVector(e.params.clone());
            evaluate_kpis(&v, &evaluate_measures(&v), &spec.limits)
        })
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(["id", "max_power_predicted", "max_power_reference", "cost_predicted", "cost_reference"])
        .map_err(internal)?;
    for (e, (k, _)) in bundle.front.iter().zip(&reference) {
        w.write_record([
            e.id.to_string(),
            e.kpis.max_power_w.to_string(),
            k.max_power_w.to_string(),
            e.kpis.cost.to_string(),
            k.cost.to_string(),
        ])
        .map_err(internal)?;
    }
    let pick = |f: fn(&(f64, f64)) -> f64, pairs: &[(f64, f64)]| -> Vec<f64> { pairs.iter().map(f).collect() };
    let power: Vec<(f64, f64)> = bundle.front.iter().zip(&reference).map(|(e, (k, _))| (e.kpis.max_power_w, k.max_power_w)).collect();
    let cost: Vec<(f64, f64)> = bundle.front.iter().zip(&reference).map(|(e, (k, _))| (e.kpis.cost, k.cost)).collect();
    let summary = PredictSummary {
        tool_version: TOOL_VERSION.into(),
        config_hash: bundle.manifest.config_hash.clone(),
        rows: bundle.front.len(),
        max_power: scalar_metrics(&pick(|p| p.0, &power), &pick(|p| p.1, &power)),
        cost: scalar_metrics(&pick(|p| p.0, &cost), &pick(|p| p.1, &cost)),
        reference_feasible: reference.iter().filter(|(_, c)| c.total_violation() == 0.0).count(),
    };
    write_atomic(&out.join("scatter.csv"), &w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
