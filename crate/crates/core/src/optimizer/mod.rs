//! Constraint-handling NSGA-II style evolutionary optimizer.

pub mod archive;
pub mod indicators;
pub mod problems;
pub mod ranking;
pub mod variation;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design_space::{DesignSpec, DesignVector};
use crate::error::OptimizerError;
use crate::machine_model::IntermediateMeasures;
use crate::rng::{substream, Purpose};
use crate::sampling::{lhs_feasible_with, SamplingConfig};

pub use archive::{dedupe_key, ParetoArchive};
pub use indicators::{coverage, hypervolume_2d};
pub use ranking::{crowding_distance, dominates, non_dominated_sort, Ranked};
pub use variation::{polynomial_mutation, sbx_crossover, tournament_select};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorTag {
    Reference,
    Surrogate,
}

impl EvaluatorTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EvaluatorTag::Reference => "reference",
            EvaluatorTag::Surrogate => "surrogate",
        }
    }
}

/// What a problem returns for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
    pub measures: Option<IntermediateMeasures>,
    /// False for designs rejected before any physics evaluation.
    pub physics_evaluated: bool,
    pub measure_seconds: f64,
    pub postprocess_seconds: f64,
}

impl Evaluation {
    pub fn new(objectives: Vec<f64>, constraints: Vec<f64>) -> Self {
        Self {
            objectives,
            constraints,
            measures: None,
            physics_evaluated: true,
            measure_seconds: 0.0,
            postprocess_seconds: 0.0,
        }
    }
}

/// An optimization problem. Evaluation must be pure: it is called
/// concurrently and results must not depend on call order.
pub trait Problem: Sync {
    fn spec(&self) -> &DesignSpec;

    fn tag(&self) -> EvaluatorTag {
        EvaluatorTag::Reference
    }

    /// Gate for the initial population.
    fn geometry_feasible(&self, _v: &DesignVector) -> bool {
        true
    }

    fn evaluate(&self, v: &DesignVector) -> Result<Evaluation, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedDesign {
    pub id: u64,
    pub design: DesignVector,
    pub measures: Option<IntermediateMeasures>,
    /// Minimized objectives; +∞ for designs that were never physics-evaluated.
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
    pub feasible: bool,
    pub violation: f64,
    pub generation: usize,
    pub evaluator: EvaluatorTag,
    pub physics_evaluated: bool,
}

impl Ranked for EvaluatedDesign {
    fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    fn violation(&self) -> f64 {
        self.violation
    }
}

/// Σ max(0, c_k).
pub fn total_violation(constraints: &[f64]) -> f64 {
    constraints.iter().map(|c| c.max(0.0)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_probability: f64,
    pub eta_c: f64,
    /// Per continuous variable; `None` means one over the dimension.
    pub mutation_probability: Option<f64>,
    pub eta_m: f64,
    pub integer_reset_probability: f64,
    pub convergence: bool,
    pub convergence_window: usize,
    pub convergence_threshold: f64,
    pub seed: u64,
    /// Multiplies the generation cap.
    pub budget_multiplier: usize,
    /// When set, the run stops once this many designs have been evaluated
    /// and the generation cap no longer applies.
    pub evaluation_budget: Option<usize>,
    /// Fixed hypervolume reference point; derived from the first feasible
    /// designs when absent.
    pub reference_point: Option<[f64; 2]>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            max_generations: 100,
            crossover_probability: 0.9,
            eta_c: 15.0,
            mutation_probability: Some(1.0 / 14.0),
            eta_m: 20.0,
            integer_reset_probability: variation::INTEGER_RESET_PROBABILITY,
            convergence: true,
            convergence_window: 10,
            convergence_threshold: 1e-3,
            seed: 0,
            budget_multiplier: 1,
            evaluation_budget: None,
            reference_point: None,
        }
    }
}

impl OptimizerConfig {
    pub fn mutation_rate(&self, dim: usize) -> f64 {
        self.mutation_probability.unwrap_or(1.0 / dim.max(1) as f64)
    }

    pub fn generation_cap(&self) -> usize {
        self.max_generations * self.budget_multiplier
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidConfig(m));
        let probs = [
            ("crossover_probability", self.crossover_probability),
            ("mutation_probability", self.mutation_probability.unwrap_or(0.0)),
            ("integer_reset_probability", self.integer_reset_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return bad(format!(
                "population_size must be even and at least 2, got {}",
                self.population_size
            ));
        }
        if self.budget_multiplier == 0 {
            return bad("budget_multiplier must be at least 1".into());
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0) {
            return bad("distribution indices must be non-negative".into());
        }
        if self.convergence && self.convergence_window == 0 {
            return bad("convergence_window must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Hypervolume of the archive front against the run's reference point.
    pub hypervolume: f64,
    /// Feasible members of the current population.
    pub feasible_count: usize,
    pub front_size: usize,
    pub archive_size: usize,
    /// Cumulative evaluations after this generation.
    pub evaluations: usize,
}

/// Wall-clock accounting; excluded from determinism guarantees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    /// Sum of per-design evaluation times (measures plus post-processing).
    pub evaluation_seconds: f64,
    pub measure_seconds: f64,
    pub postprocess_seconds: f64,
    /// Selection, variation, ranking and archive updates.
    pub overhead_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub population: Vec<EvaluatedDesign>,
    pub front: Vec<EvaluatedDesign>,
    pub archive: ParetoArchive,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
    /// Evaluations that reached the physics (not geometry-rejected).
    pub physics_evaluations: usize,
    pub reference_point: Option<[f64; 2]>,
    pub generations: usize,
    pub converged: bool,
    pub timing: RunTiming,
}

impl OptResult {
    /// Equality of everything except wall-clock timing.
    pub fn same_outcome(&self, other: &OptResult) -> bool {
        OptResult {
            timing: RunTiming::default(),
            ..self.clone()
        } == OptResult {
            timing: RunTiming::default(),
            ..other.clone()
        }
    }
}

/// Reference point from the componentwise worst feasible objectives, moved
/// outward by 10 % of each magnitude.
pub fn reference_from<'a, I>(designs: I) -> Option<[f64; 2]>
where
    I: IntoIterator<Item = &'a EvaluatedDesign>,
{
    let mut worst: Option<[f64; 2]> = None;
    for d in designs.into_iter().filter(|d| d.feasible && d.objectives.len() == 2) {
        let w = worst.get_or_insert([f64::NEG_INFINITY; 2]);
        w[0] = w[0].max(d.objectives[0]);
        w[1] = w[1].max(d.objectives[1]);
    }
    worst.map(|w| [w[0] + 0.1 * w[0].abs(), w[1] + 0.1 * w[1].abs()])
}

fn front_hypervolume(archive: &ParetoArchive, reference: Option<[f64; 2]>) -> f64 {
    let Some(r) = reference else { return 0.0 };
    let pts: Vec<[f64; 2]> = archive
        .pareto_front()
        .iter()
        .filter(|d| d.objectives.len() == 2)
        .map(|d| [d.objectives[0], d.objectives[1]])
        .collect();
    hypervolume_2d(&pts, r)
}

/// Indices of `pop` surviving truncation to `n` by front rank and crowding.
pub fn environmental_selection(pop: &[EvaluatedDesign], n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    for front in non_dominated_sort(pop) {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            if chosen.len() == n {
                break;
            }
            continue;
        }
        let objs: Vec<&[f64]> = front.iter().map(|&i| pop[i].objectives.as_slice()).collect();
        let dist = crowding_distance(&objs);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        let need = n - chosen.len();
        chosen.extend(order.into_iter().take(need).map(|k| front[k]));
        break;
    }
    chosen
}

/// Front rank and crowding distance of every member.
pub fn rank_and_crowd(pop: &[EvaluatedDesign]) -> (Vec<usize>, Vec<f64>) {
    let fronts = non_dominated_sort(pop);
    let rank = ranking::front_ranks(&fronts, pop.len());
    let mut crowd = vec![0.0; pop.len()];
    for f in &fronts {
        let objs: Vec<&[f64]> = f.iter().map(|&i| pop[i].objectives.as_slice()).collect();
        for (k, d) in crowding_distance(&objs).into_iter().enumerate() {
            crowd[f[k]] = d;
        }
    }
    (rank, crowd)
}

struct RunState {
    archive: ParetoArchive,
    history: Vec<GenerationStats>,
    next_id: u64,
    evaluations: usize,
    physics_evaluations: usize,
    reference: Option<[f64; 2]>,
    timing: RunTiming,
}

impl RunState {
    fn into_result(self, population: Vec<EvaluatedDesign>, converged: bool) -> OptResult {
        OptResult {
            front: self.archive.pareto_front().into_iter().cloned().collect(),
            generations: self.history.len().saturating_sub(1),
            population,
            archive: self.archive,
            history: self.history,
            evaluations: self.evaluations,
            physics_evaluations: self.physics_evaluations,
            reference_point: self.reference,
            converged,
            timing: self.timing,
        }
    }

    fn evaluate<P: Problem>(
        &mut self,
        problem: &P,
        designs: Vec<DesignVector>,
        generation: usize,
    ) -> Result<Vec<EvaluatedDesign>, String> {
        let results: Vec<Result<Evaluation, String>> =
            designs.par_iter().map(|v| problem.evaluate(v)).collect();
        let mut out = Vec::with_capacity(designs.len());
        for (v, r) in designs.into_iter().zip(results) {
            let e = r.map_err(|m| format!("design {v}: {m}"))?;
            if e.objectives.iter().chain(&e.constraints).any(|x| x.is_nan()) {
                return Err(format!("design {v}: evaluator returned NaN"));
            }
            self.evaluations += 1;
            self.physics_evaluations += usize::from(e.physics_evaluated);
            self.timing.measure_seconds += e.measure_seconds;
            self.timing.postprocess_seconds += e.postprocess_seconds;
            self.timing.evaluation_seconds += e.measure_seconds + e.postprocess_seconds;
            let violation = total_violation(&e.constraints);
            out.push(EvaluatedDesign {
                id: self.next_id,
                design: v,
                measures: e.measures,
                objectives: e.objectives,
                constraints: e.constraints,
                feasible: violation == 0.0,
                violation,
                generation,
                evaluator: problem.tag(),
                physics_evaluated: e.physics_evaluated,
            });
            self.next_id += 1;
        }
        Ok(out)
    }

    fn record(&mut self, generation: usize, population: &[EvaluatedDesign]) {
        self.history.push(GenerationStats {
            generation,
            hypervolume: front_hypervolume(&self.archive, self.reference),
            feasible_count: population.iter().filter(|d| d.feasible).count(),
            front_size: self.archive.pareto_front().len(),
            archive_size: self.archive.len(),
            evaluations: self.evaluations,
        });
    }
}

/// Runs the evolutionary loop.
///
/// Generation 0 is a geometry-feasible Latin hypercube of the population
/// size drawn with the master seed. Every later generation evaluates one
/// offspring population, keeps the best of parents and offspring, updates
/// the archive and records the archive-front hypervolume.
pub fn run<P: Problem>(cfg: &OptimizerConfig, problem: &P) -> Result<OptResult, OptimizerError> {
    cfg.validate()?;
    let started = Instant::now();
    let spec = problem.spec();
    let n = cfg.population_size;
    let init = lhs_feasible_with(&SamplingConfig::new(n, cfg.seed), spec, |v| {
        problem.geometry_feasible(v)
    })?;

    let mut state = RunState {
        archive: ParetoArchive::new(),
        history: Vec::new(),
        next_id: 0,
        evaluations: 0,
        physics_evaluations: 0,
        reference: cfg.reference_point,
        timing: RunTiming::default(),
    };
    let fail = |state: RunState, population: Vec<EvaluatedDesign>, message: String| {
        let mut partial = state.into_result(population, false);
        partial.timing.total_seconds = started.elapsed().as_secs_f64();
        OptimizerError::EvaluatorFailure {
            message,
            partial: Box::new(partial),
        }
    };

    let mut population = match state.evaluate(problem, init, 0) {
        Ok(p) => p,
        Err(m) => return Err(fail(state, Vec::new(), m)),
    };
    let t = Instant::now();
    for d in &population {
        state.archive.insert(d.clone());
    }
    if state.reference.is_none() {
        state.reference = reference_from(&population);
    }
    state.record(0, &population);
    state.timing.overhead_seconds += t.elapsed().as_secs_f64();

    let mut converged = false;
    for generation in 1.. {
        let done = match cfg.evaluation_budget {
            Some(budget) => state.evaluations >= budget,
            None => generation > cfg.generation_cap(),
        };
        if done {
            break;
        }

        let t = Instant::now();
        let (rank, crowd) = rank_and_crowd(&population);
        let g = generation as u64;
        let mut sel = substream(cfg.seed, Purpose::Selection, g);
        let mut cx = substream(cfg.seed, Purpose::Crossover, g);
        let mut mu = substream(cfg.seed, Purpose::Mutation, g);
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = tournament_select(&rank, &crowd, &mut sel);
            let b = tournament_select(&rank, &crowd, &mut sel);
            let (c1, c2) =
                sbx_crossover(&population[a].design, &population[b].design, spec, cfg, &mut cx);
            offspring.push(polynomial_mutation(&c1, spec, cfg, &mut mu));
            offspring.push(polynomial_mutation(&c2, spec, cfg, &mut mu));
        }
        state.timing.overhead_seconds += t.elapsed().as_secs_f64();

        let children = match state.evaluate(problem, offspring, generation) {
            Ok(c) => c,
            Err(m) => return Err(fail(state, population, m)),
        };

        let t = Instant::now();
        for d in &children {
            state.archive.insert(d.clone());
        }
        if state.reference.is_none() {
            state.reference = reference_from(state.archive.members());
        }
        let mut merged = population;
        merged.extend(children);
        let keep = environmental_selection(&merged, n);
        population = keep.into_iter().map(|i| merged[i].clone()).collect();
        state.record(generation, &population);
        state.timing.overhead_seconds += t.elapsed().as_secs_f64();

        if cfg.convergence && generation >= cfg.convergence_window {
            let now = state.history[generation].hypervolume;
            let before = state.history[generation - cfg.convergence_window].hypervolume;
            if now > 0.0 && (now - before) / now < cfg.convergence_threshold {
                converged = true;
                break;
            }
        }
    }

    let mut result = state.into_result(population, converged);
    result.timing.total_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}
