use std::f64::consts::SQRT_2;
use std::time::Instant;

use pmsm_moo::optimizer::indicators::generational_distance;
use pmsm_moo::optimizer::problems::{ConstrainedDemo, Zdt1, Zdt2, DEMO_CENTER};
use pmsm_moo::optimizer::{hypervolume_2d, run, OptResult, OptimizerConfig, Problem};
use serde::{Deserialize, Serialize};

use crate::artifacts::{history_csv, write_atomic, write_json, TOOL_VERSION};
use crate::config::{CampaignConfig, Suite};
use crate::error::CliError;

pub const REFERENCE: [f64; 2] = [1.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub tool_version: String,
    pub config_hash: String,
    pub suite: Suite,
    pub n_vars: usize,
    pub reference_point: [f64; 2],
    pub hypervolume: f64,
    pub analytic_hypervolume: f64,
    pub hypervolume_ratio: f64,
    pub generational_distance: f64,
    pub front_size: usize,
    pub generations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub seconds: f64,
    /// Constrained demo only: front points inside the excluded disc.
    pub points_in_excluded_region: Option<usize>,
}

/// Ends of the gap the demo's disc cuts into the line f1 + f2 = 1.
fn demo_gap(radius: f64) -> (f64, f64) {
    let h = radius / SQRT_2;
    (DEMO_CENTER[0] - h, DEMO_CENTER[0] + h)
}

/// Hypervolume of the true front against (1, 1).
pub fn analytic_hypervolume(suite: Suite) -> f64 {
    match suite {
        // 1 - ∫ (1 - √x) dx
        Suite::Zdt1 => 2.0 / 3.0,
        // 1 - ∫ (1 - x²) dx
        Suite::Zdt2 => 1.0 / 3.0,
        Suite::ConstrainedDemo => {
            // line segments on both sides of the gap, a flat step across it
            let (a, b) = demo_gap(ConstrainedDemo::default().radius);
            a * a / 2.0 + (b - a) * a + (1.0 - b * b) / 2.0
        }
    }
}

/// Evenly spaced points on the true front.
pub fn true_front(suite: Suite, samples: usize) -> Vec<Vec<f64>> {
    match suite {
        Suite::Zdt1 => Zdt1::true_front(samples),
        Suite::Zdt2 => Zdt2::true_front(samples),
        Suite::ConstrainedDemo => {
            let (a, b) = demo_gap(ConstrainedDemo::default().radius);
            (0..samples)
                .map(|i| i as f64 / (samples - 1) as f64 * (1.0 - (b - a)))
                .map(|s| if s <= a { s } else { s + (b - a) })
                .map(|f1| vec![f1, 1.0 - f1])
                .collect()
        }
    }
}

fn solve<P: Problem>(cfg: &OptimizerConfig, p: &P) -> Result<OptResult, CliError> {
    Ok(run(cfg, p)?)
}

/// Runs the optimizer on an analytic problem and writes a report, the final
/// front and the history under `results/benchmark/<suite>/`.
pub fn cmd_benchmark(cfg: &CampaignConfig, suite: Suite) -> Result<BenchmarkReport, CliError> {
    cfg.require_seed("optimizer")?;
    let oc = OptimizerConfig {
        reference_point: Some(REFERENCE),
        ..cfg.optimizer.clone()
    };
    let n_vars = match suite {
        Suite::ConstrainedDemo => 2,
        _ => cfg.benchmark.n_vars,
    };
    let t = Instant::now();
    let result = match suite {
        Suite::Zdt1 => solve(&oc, &Zdt1::new(n_vars))?,
        Suite::Zdt2 => solve(&oc, &Zdt2::new(n_vars))?,
        Suite::ConstrainedDemo => solve(&oc, &ConstrainedDemo::default())?,
    };
    let seconds = t.elapsed().as_secs_f64();

    let front: Vec<Vec<f64>> = result.front.iter().map(|d| d.objectives.clone()).collect();
    let pts: Vec<[f64; 2]> = front.iter().map(|p| [p[0], p[1]]).collect();
    let hypervolume = hypervolume_2d(&pts, REFERENCE);
    let analytic = analytic_hypervolume(suite);
    let in_disc = (suite == Suite::ConstrainedDemo).then(|| {
        let demo = ConstrainedDemo::default();
        front.iter().filter(|p| demo.constraint([p[0], p[1]]) > 0.0).count()
    });
    let report = BenchmarkReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        suite,
        n_vars,
        reference_point: REFERENCE,
        hypervolume,
        analytic_hypervolume: analytic,
        hypervolume_ratio: hypervolume / analytic,
        generational_distance: generational_distance(&front, &true_front(suite, cfg.benchmark.truth_samples)),
        front_size: front.len(),
        generations: result.generations,
        evaluations: result.evaluations,
        converged: result.converged,
        seconds,
        points_in_excluded_region: in_disc,
    };

    let dir = cfg.results_dir().join("benchmark").join(suite.as_str());
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(["f1", "f2"]).map_err(internal)?;
    for p in &front {
        w.write_record([p[0].to_string(), p[1].to_string()]).map_err(internal)?;
    }
    write_atomic(&dir.join("front.csv"), &w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)?;
    write_atomic(&dir.join("history.csv"), &history_csv(&result.history)?)?;
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}
