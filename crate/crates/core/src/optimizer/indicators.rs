//! Front-quality indicators.

use super::ranking::{pareto_dominates, weakly_dominates};

/// Exact hypervolume of a two-objective front (minimization) against
/// `reference`. Points that do not strictly dominate the reference are
/// ignored; dominated points inside the set are handled by the sweep.
pub fn hypervolume_2d(front: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = front
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut hv = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            hv += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    hv
}

/// Fraction of `b` weakly dominated by at least one member of `a`.
pub fn coverage(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let covered = b
        .iter()
        .filter(|y| a.iter().any(|x| weakly_dominates(x, y)))
        .count();
    covered as f64 / b.len() as f64
}

/// Mean Euclidean distance from each point to the nearest point of a
/// reference sample of the true front.
pub fn generational_distance(front: &[Vec<f64>], true_front: &[Vec<f64>]) -> f64 {
    if front.is_empty() || true_front.is_empty() {
        return f64::INFINITY;
    }
    let total: f64 = front
        .iter()
        .map(|p| {
            true_front
                .iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / front.len() as f64
}

/// Non-dominated subset of a point set, in input order.
pub fn non_dominated(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .filter(|p| !points.iter().any(|q| pareto_dominates(q, p)))
        .cloned()
        .collect()
}
