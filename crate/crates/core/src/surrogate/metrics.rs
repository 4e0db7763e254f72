//! Regression metrics for predicted measures and KPIs.
//!
//! A group R² is the mean of the per-output coefficients of determination
//! over the outputs whose reference values vary across the set; constant
//! outputs (such as the zero psi_q row) carry no information and are
//! skipped. MAPE is a fraction (0.05 = 5 %) pooled over every output and
//! sample of the group, skipping reference values with magnitude ≤ 1e-12.

use serde::{Deserialize, Serialize};

const MAPE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub r2: f64,
    pub mape: f64,
    pub n: usize,
}

/// Coefficient of determination of one output. `None` when the reference
/// has zero variance.
pub fn r2_score(pred: &[f64], reference: &[f64]) -> Option<f64> {
    let n = reference.len() as f64;
    if reference.is_empty() {
        return None;
    }
    let mean = reference.iter().sum::<f64>() / n;
    let ss_tot: f64 = reference.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let ss_res: f64 = pred.iter().zip(reference).map(|(p, y)| (p - y) * (p - y)).sum();
    Some(1.0 - ss_res / ss_tot)
}

pub fn mape(pred: &[f64], reference: &[f64]) -> f64 {
    let (sum, count) = pred
        .iter()
        .zip(reference)
        .filter(|(_, y)| y.abs() > MAPE_FLOOR)
        .fold((0.0, 0usize), |(s, c), (p, y)| (s + ((p - y) / y).abs(), c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Metrics of a scalar quantity.
pub fn scalar_metrics(pred: &[f64], reference: &[f64]) -> RegressionMetrics {
    RegressionMetrics {
        // a constant reference predicted exactly counts as perfect
        r2: r2_score(pred, reference).unwrap_or(if pred == reference { 1.0 } else { 0.0 }),
        mape: mape(pred, reference),
        n: reference.len(),
    }
}

/// Metrics of a group of outputs; rows are samples.
pub fn group_metrics(pred: &[Vec<f64>], reference: &[Vec<f64>]) -> RegressionMetrics {
    let width = reference.first().map(|r| r.len()).unwrap_or(0);
    let mut r2s = Vec::new();
    let mut all_p = Vec::new();
    let mut all_y = Vec::new();
    for j in 0..width {
        let p: Vec<f64> = pred.iter().map(|r| r[j]).collect();
        let y: Vec<f64> = reference.iter().map(|r| r[j]).collect();
        if let Some(r2) = r2_score(&p, &y) {
            r2s.push(r2);
        }
        all_p.extend(p);
        all_y.extend(y);
    }
    let r2 = if r2s.is_empty() {
        if all_p == all_y {
            1.0
        } else {
            0.0
        }
    } else {
        r2s.iter().sum::<f64>() / r2s.len() as f64
    };
    RegressionMetrics {
        r2,
        mape: mape(&all_p, &all_y),
        n: reference.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [1.0, 2.0, 4.0];
        let m = scalar_metrics(&y, &y);
        assert_eq!(m.r2, 1.0);
        assert_eq!(m.mape, 0.0);
    }

    #[test]
    fn mean_prediction_has_zero_r2() {
        let y = [1.0, 2.0, 6.0];
        assert!(r2_score(&[3.0; 3], &y).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hand_values() {
        // residuals 0.5, -0.5, 0; ss_tot = 2
        let r2 = r2_score(&[1.5, 1.5, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r2 - 0.75).abs() < 1e-15);
        let m = mape(&[1.1, 0.0, 1.8], &[1.0, 0.0, 2.0]);
        assert!((m - 0.1).abs() < 1e-12);
    }

    #[test]
    fn group_skips_constant_columns() {
        let y = vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]];
        let p = vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]];
        let m = group_metrics(&p, &y);
        assert_eq!(m.r2, 1.0);
        assert_eq!(m.n, 3);
    }
}
