use serde::{Deserialize, Serialize};

use crate::design_space::DesignSpec;

pub const STD_FLOOR: f64 = 1e-12;

/// Input min-max scaling by the design bounds and output z-scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub in_lower: Vec<f64>,
    pub in_range: Vec<f64>,
    pub out_mean: Vec<f64>,
    pub out_std: Vec<f64>,
}

impl Scaler {
    /// Output statistics come from `outputs`, which should be the training
    /// split only.
    pub fn fit(spec: &DesignSpec, outputs: &[Vec<f64>]) -> Self {
        let n_out = outputs.first().map(|o| o.len()).unwrap_or(0);
        let n = outputs.len().max(1) as f64;
        let mut mean = vec![0.0; n_out];
        for o in outputs {
            mean.iter_mut().zip(o).for_each(|(m, x)| *m += x / n);
        }
        let mut var = vec![0.0; n_out];
        for o in outputs {
            var.iter_mut()
                .zip(o.iter().zip(&mean))
                .for_each(|(s, (x, m))| *s += (x - m) * (x - m) / n);
        }
        Self {
            in_lower: spec.params.iter().map(|p| p.lower).collect(),
            in_range: spec.params.iter().map(|p| p.range()).collect(),
            out_mean: mean,
            out_std: var.into_iter().map(|v| v.sqrt().max(STD_FLOOR)).collect(),
        }
    }

    pub fn scale_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.in_lower.iter().zip(&self.in_range))
            .map(|(v, (lo, r))| if *r > 0.0 { (v - lo) / r } else { 0.0 })
            .collect()
    }

    pub fn unscale_input(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.in_lower.iter().zip(&self.in_range))
            .map(|(v, (lo, r))| lo + v * r)
            .collect()
    }

    pub fn scale_output(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.out_mean.iter().zip(&self.out_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn unscale_output(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.out_mean.iter().zip(&self.out_std))
            .map(|(v, (m, s))| m + v * s)
            .collect()
    }
}
