use std::path::Path;

use pmsm_moo::design_space::DesignVector;
use pmsm_moo::evaluator::ClassicalProblem;
use pmsm_moo::optimizer::indicators::non_dominated;
use pmsm_moo::optimizer::{coverage, hypervolume_2d, total_violation, EvaluatorTag, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::Bundle;
use crate::artifacts::{write_atomic, write_json, TOOL_VERSION};
use crate::config::CampaignConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    pub label: String,
    pub evaluator: EvaluatorTag,
    pub size: usize,
    pub hypervolume: f64,
}

/// A surrogate front after re-evaluating its designs with the reference
/// model: the designs still feasible, reduced to their non-dominated set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reevaluated {
    pub size: usize,
    pub hypervolume: f64,
    /// Hypervolume relative to the other front's recorded hypervolume.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tool_version: String,
    pub kpi_hash: String,
    pub reference_point: [f64; 2],
    pub a: FrontSummary,
    pub b: FrontSummary,
    /// HV(B) / HV(A).
    pub hypervolume_ratio: f64,
    /// Fraction of B weakly dominated by A.
    pub coverage_ab: f64,
    /// Fraction of A weakly dominated by B.
    pub coverage_ba: f64,
    pub a_reevaluated: Option<Reevaluated>,
    pub b_reevaluated: Option<Reevaluated>,
}

/// Shared reference point: componentwise worst over both fronts, widened by
/// 10 % of its magnitude.
pub fn shared_reference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<[f64; 2]> {
    let mut it = a.iter().chain(b).peekable();
    it.peek()?;
    let mut w = [f64::NEG_INFINITY; 2];
    for p in it {
        w[0] = w[0].max(p[0]);
        w[1] = w[1].max(p[1]);
    }
    Some([w[0] + 0.1 * w[0].abs(), w[1] + 0.1 * w[1].abs()])
}

fn hv(points: &[Vec<f64>], r: [f64; 2]) -> f64 {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    hypervolume_2d(&pts, r)
}

/// Objective vectors of the feasible, non-dominated subset of `designs`
/// under the reference model.
pub fn reference_front(cfg: &CampaignConfig, designs: &[DesignVector]) -> Result<Vec<Vec<f64>>, CliError> {
    let problem = ClassicalProblem::classical(cfg.design_spec());
    let evals = designs
        .par_iter()
        .map(|v| problem.evaluate(v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Internal)?;
    let feasible: Vec<Vec<f64>> = evals
        .into_iter()
        .filter(|e| total_violation(&e.constraints) == 0.0)
        .map(|e| e.objectives)
        .collect();
    Ok(non_dominated(&feasible))
}

fn label(b: &Bundle) -> String {
    b.manifest.variant.as_str().to_string()
}

/// Compares the final fronts of two result bundles and writes the report and
/// a merged plot-data CSV to `out`.
pub fn cmd_compare(cfg: &CampaignConfig, a_dir: &Path, b_dir: &Path, out: &Path) -> Result<CompareReport, CliError> {
    let a = Bundle::load(a_dir)?;
    let b = Bundle::load(b_dir)?;
    if a.manifest.kpi_hash != b.manifest.kpi_hash {
        return Err(CliError::Mismatch(format!(
            "{} and {} use different KPI definitions",
            a_dir.display(),
            b_dir.display()
        )));
    }
    let pa: Vec<Vec<f64>> = a.front.iter().map(|e| e.objectives()).collect();
    let pb: Vec<Vec<f64>> = b.front.iter().map(|e| e.objectives()).collect();
    let r = shared_reference(&pa, &pb)
        .ok_or_else(|| CliError::Feasibility("both fronts are empty; nothing to compare".into()))?;
    let (hva, hvb) = (hv(&pa, r), hv(&pb, r));

    let mut plot = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    plot.write_record(["front", "k1", "k2"]).map_err(internal)?;
    let mut rows = |name: &str, pts: &[Vec<f64>]| -> Result<(), CliError> {
        for p in pts {
            plot.write_record([name.to_string(), p[0].to_string(), p[1].to_string()])
                .map_err(internal)?;
        }
        Ok(())
    };
    rows(&label(&a), &pa)?;
    rows(&label(&b), &pb)?;

    let mut reevaluate = |bundle: &Bundle, other_hv: f64| -> Result<Option<Reevaluated>, CliError> {
        if bundle.manifest.evaluator != EvaluatorTag::Surrogate {
            return Ok(None);
        }
        let designs: Vec<DesignVector> = bundle.front.iter().map(|e| DesignVector(e.params.clone())).collect();
        let front = reference_front(cfg, &designs)?;
        rows(&format!("{}-reference", label(bundle)), &front)?;
        let h = hv(&front, r);
        Ok(Some(Reevaluated {
            size: front.len(),
            hypervolume: h,
            ratio: if other_hv > 0.0 { h / other_hv } else { f64::NAN },
        }))
    };
    let a_re = reevaluate(&a, hvb)?;
    let b_re = reevaluate(&b, hva)?;

    let report = CompareReport {
        tool_version: TOOL_VERSION.into(),
        kpi_hash: a.manifest.kpi_hash.clone(),
        reference_point: r,
        a: FrontSummary {
            label: label(&a),
            evaluator: a.manifest.evaluator,
            size: pa.len(),
            hypervolume: hva,
        },
        b: FrontSummary {
            label: label(&b),
            evaluator: b.manifest.evaluator,
            size: pb.len(),
            hypervolume: hvb,
        },
        hypervolume_ratio: if hva > 0.0 { hvb / hva } else { f64::NAN },
        coverage_ab: coverage(&pa, &pb),
        coverage_ba: coverage(&pb, &pa),
        a_reevaluated: a_re,
        b_reevaluated: b_re,
    };
    write_atomic(&out.join("fronts.csv"), &plot.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)?;
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
