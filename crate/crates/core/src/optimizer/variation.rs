//! Selection, crossover and mutation operators.

use rand::Rng;

use super::OptimizerConfig;
use crate::design_space::{DesignSpec, DesignVector};

/// Integer variables are redrawn with this probability during mutation.
pub const INTEGER_RESET_PROBABILITY: f64 = 0.1;

/// Winner of a binary tournament between `a` and `b`: lower rank, then
/// larger crowding distance, then a fair coin.
pub fn binary_tournament<R: Rng + ?Sized>(
    a: usize,
    b: usize,
    rank: &[usize],
    crowding: &[f64],
    rng: &mut R,
) -> usize {
    if rank[a] != rank[b] {
        return if rank[a] < rank[b] { a } else { b };
    }
    if crowding[a] != crowding[b] {
        return if crowding[a] > crowding[b] { a } else { b };
    }
    if rng.gen_bool(0.5) {
        a
    } else {
        b
    }
}

/// Draws two members uniformly (with replacement) and returns the winner.
pub fn tournament_select<R: Rng + ?Sized>(rank: &[usize], crowding: &[f64], rng: &mut R) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    binary_tournament(a, b, rank, crowding, rng)
}

fn sbx_spread<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    }
}

/// Simulated binary crossover. With probability `crossover_probability`
/// each continuous variable is recombined with chance 0.5 (the two
/// offspring values are then exchanged between the children with chance
/// 0.5) and each integer variable swapped with chance 0.5; otherwise the
/// parents are copied.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &DesignVector,
    p2: &DesignVector,
    spec: &DesignSpec,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> (DesignVector, DesignVector) {
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    if !rng.gen_bool(cfg.crossover_probability) {
        return (c1, c2);
    }
    for (i, p) in spec.params.iter().enumerate() {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let (x1, x2) = (p1[i], p2[i]);
        if x1 == x2 {
            continue;
        }
        if p.is_integer() {
            c1[i] = p.clamp(x2);
            c2[i] = p.clamp(x1);
        } else {
            let beta = sbx_spread(cfg.eta_c, rng);
            let a = p.clamp(0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2));
            let b = p.clamp(0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2));
            // children take either offspring value with equal chance
            if rng.gen_bool(0.5) {
                (c1[i], c2[i]) = (b, a);
            } else {
                (c1[i], c2[i]) = (a, b);
            }
        }
    }
    (c1, c2)
}

/// Polynomial mutation of continuous variables, random reset of integer
/// variables.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    v: &DesignVector,
    spec: &DesignSpec,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> DesignVector {
    let pm = cfg.mutation_rate(spec.dim());
    let mut out = v.clone();
    for (i, p) in spec.params.iter().enumerate() {
        if p.is_integer() {
            if rng.gen_bool(cfg.integer_reset_probability) {
                out[i] = rng.gen_range(p.lower as i64..=p.upper as i64) as f64;
            }
            continue;
        }
        if !rng.gen_bool(pm) {
            continue;
        }
        let u: f64 = rng.gen();
        let e = 1.0 / (cfg.eta_m + 1.0);
        let delta = if u < 0.5 {
            (2.0 * u).powf(e) - 1.0
        } else {
            1.0 - (2.0 * (1.0 - u)).powf(e)
        };
        out[i] = p.clamp(v[i] + delta * p.range());
    }
    out
}
