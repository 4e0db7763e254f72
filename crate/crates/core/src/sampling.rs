//! Latin hypercube sampling with an optional geometry gate.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design_space::{geometry_check, DesignSpec, DesignVector};
use crate::error::SamplingError;
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n_lhs: usize,
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub max_resample_rounds: usize,
}

fn default_rounds() -> usize {
    100
}

impl SamplingConfig {
    pub fn new(n_lhs: usize, seed: u64) -> Self {
        Self {
            n_lhs,
            seed,
            max_resample_rounds: default_rounds(),
        }
    }
}

/// One Latin hypercube of `cfg.n_lhs` points (round 0 of the seed).
pub fn lhs_sample(cfg: &SamplingConfig, spec: &DesignSpec) -> Vec<DesignVector> {
    lhs_round(cfg.n_lhs, cfg.seed, 0, spec)
}

fn lhs_round(n: usize, seed: u64, round: u64, spec: &DesignSpec) -> Vec<DesignVector> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = substream(seed, Purpose::Lhs, round);
    let mut columns = Vec::with_capacity(spec.dim());
    for p in &spec.params {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let width = p.range() / n as f64;
        let col: Vec<f64> = strata
            .into_iter()
            .map(|k| {
                let u: f64 = rng.gen();
                // keep the point inside its stratum despite rounding
                let x = (p.lower + (k as f64 + u) * width).min(p.lower + (k + 1) as f64 * width);
                p.clamp(x)
            })
            .collect();
        columns.push(col);
    }
    (0..n)
        .map(|i| DesignVector(columns.iter().map(|c| c[i]).collect()))
        .collect()
}

/// LHS population filtered by the double-V geometry check.
pub fn lhs_feasible(
    cfg: &SamplingConfig,
    spec: &DesignSpec,
) -> Result<Vec<DesignVector>, SamplingError> {
    lhs_feasible_with(cfg, spec, |v| geometry_check(v, &spec.limits).feasible)
}

/// LHS with rejection. Each round draws a full fresh hypercube from the
/// round's substream and keeps feasible points in order until `n_lhs` are
/// collected.
pub fn lhs_feasible_with<F>(
    cfg: &SamplingConfig,
    spec: &DesignSpec,
    feasible: F,
) -> Result<Vec<DesignVector>, SamplingError>
where
    F: Fn(&DesignVector) -> bool,
{
    if cfg.n_lhs == 0 {
        return Err(SamplingError::EmptyRequest);
    }
    let mut out = Vec::with_capacity(cfg.n_lhs);
    let rounds = cfg.max_resample_rounds.max(1);
    for round in 0..rounds {
        for v in lhs_round(cfg.n_lhs, cfg.seed, round as u64, spec) {
            if feasible(&v) {
                out.push(v);
                if out.len() == cfg.n_lhs {
                    return Ok(out);
                }
            }
        }
    }
    Err(SamplingError::FeasibilityExhausted {
        wanted: cfg.n_lhs,
        found: out.len(),
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::ParamSpec;

    fn one_dim() -> DesignSpec {
        DesignSpec {
            params: vec![ParamSpec::continuous("x", 0.0, 1.0)],
            limits: Default::default(),
        }
    }

    #[test]
    fn five_points_one_per_stratum() {
        let pts = lhs_sample(&SamplingConfig::new(5, 11), &one_dim());
        let mut buckets: Vec<usize> = pts.iter().map(|v| (v[0] * 5.0).floor() as usize).collect();
        buckets.sort();
        assert_eq!(buckets, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_point_inside_bounds() {
        let spec = DesignSpec::double_v();
        let pts = lhs_sample(&SamplingConfig::new(1, 3), &spec);
        assert_eq!(pts.len(), 1);
        assert!(spec.contains(&pts[0]));
    }

    #[test]
    fn same_seed_same_output() {
        let spec = DesignSpec::double_v();
        let cfg = SamplingConfig::new(20, 99);
        assert_eq!(lhs_sample(&cfg, &spec), lhs_sample(&cfg, &spec));
        assert_ne!(lhs_sample(&cfg, &spec), lhs_sample(&SamplingConfig::new(20, 100), &spec));
    }

    #[test]
    fn unconstrained_feasible_matches_round_zero() {
        let spec = DesignSpec::unit_box(4);
        let cfg = SamplingConfig::new(17, 5);
        assert_eq!(lhs_feasible_with(&cfg, &spec, |_| true).unwrap(), lhs_sample(&cfg, &spec));
    }

    #[test]
    fn default_spec_feasible_population() {
        let spec = DesignSpec::double_v();
        let pts = lhs_feasible(&SamplingConfig::new(100, 2024), &spec).unwrap();
        assert_eq!(pts.len(), 100);
        for v in &pts {
            assert!(spec.contains(v));
            assert!(geometry_check(v, &spec.limits).feasible);
        }
    }

    #[test]
    fn impossible_packaging_exhausts() {
        let mut spec = DesignSpec::double_v();
        spec.limits.r_max = 60.0;
        let cfg = SamplingConfig {
            n_lhs: 10,
            seed: 1,
            max_resample_rounds: 5,
        };
        assert_eq!(
            lhs_feasible(&cfg, &spec),
            Err(SamplingError::FeasibilityExhausted {
                wanted: 10,
                found: 0,
                rounds: 5
            })
        );
    }

    #[test]
    fn zero_request_is_an_error() {
        let cfg = SamplingConfig::new(0, 1);
        assert_eq!(
            lhs_feasible(&cfg, &DesignSpec::double_v()),
            Err(SamplingError::EmptyRequest)
        );
        assert!(lhs_sample(&cfg, &DesignSpec::double_v()).is_empty());
    }
}
