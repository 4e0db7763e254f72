//! Ranking and indicators against brute-force and Monte-Carlo oracles, plus
//! run-level properties on the analytic benchmarks.

use pmsm_moo::design_space::DesignVector;
use pmsm_moo::optimizer::indicators::non_dominated;
use pmsm_moo::optimizer::problems::{ConstrainedDemo, Zdt1, DEMO_CENTER};
use pmsm_moo::optimizer::ranking::{front_ranks, Ranked};
use pmsm_moo::optimizer::{
    coverage, dominates, hypervolume_2d, non_dominated_sort, rank_and_crowd, run, tournament_select,
    EvaluatedDesign, EvaluatorTag, OptimizerConfig,
};
use pmsm_moo::rng::{substream, Purpose};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn design(obj: [f64; 2], violation: f64) -> EvaluatedDesign {
    EvaluatedDesign {
        id: 0,
        design: DesignVector(vec![]),
        measures: None,
        objectives: obj.to_vec(),
        constraints: vec![violation],
        feasible: violation == 0.0,
        violation,
        generation: 0,
        evaluator: EvaluatorTag::Reference,
        physics_evaluated: true,
    }
}

fn random_population(rng: &mut ChaCha8Rng, n: usize) -> Vec<EvaluatedDesign> {
    (0..n)
        .map(|_| {
            // a coarse grid makes ties and equal violations common
            let o = [rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64];
            let v = if rng.gen_bool(0.3) { rng.gen_range(1..5) as f64 * 0.5 } else { 0.0 };
            design(o, v)
        })
        .collect()
}

/// Peel off the members nobody in the remainder dominates.
fn brute_force_fronts<T: Ranked>(pop: &[T]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..pop.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates(&pop[j], &pop[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

#[test]
fn sort_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..=200);
        let pop = random_population(&mut rng, n);
        let fronts = non_dominated_sort(&pop);
        assert_eq!(fronts, brute_force_fronts(&pop));
        let mut all: Vec<usize> = fronts.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        for a in &fronts[0] {
            for b in &fronts[0] {
                assert!(!dominates(&pop[*a], &pop[*b]));
            }
        }
    }
}

fn monte_carlo_hv(front: &[[f64; 2]], r: [f64; 2], lo: [f64; 2], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let box_area = (r[0] - lo[0]) * (r[1] - lo[1]);
    let hits = (0..samples)
        .filter(|_| {
            let x = rng.gen_range(lo[0]..r[0]);
            let y = rng.gen_range(lo[1]..r[1]);
            front.iter().any(|p| p[0] <= x && p[1] <= y)
        })
        .count();
    box_area * hits as f64 / samples as f64
}

#[test]
fn hypervolume_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.gen_range(1..30);
        let front: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let exact = hypervolume_2d(&front, [1.0, 1.0]);
        // nothing outside the box spanned by the front's minima is dominated
        let lo = [
            front.iter().map(|p| p[0]).fold(1.0, f64::min),
            front.iter().map(|p| p[1]).fold(1.0, f64::min),
        ];
        let mc = monte_carlo_hv(&front, [1.0, 1.0], lo, 200_000, &mut rng);
        assert!((exact - mc).abs() <= 0.01 * exact, "{exact} vs {mc}");
    }
}

#[test]
fn coverage_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let a: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64]).collect();
        let b: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64]).collect();
        let mut covered = 0;
        for y in &b {
            let mut hit = false;
            for x in &a {
                if x[0] <= y[0] && x[1] <= y[1] {
                    hit = true;
                }
            }
            covered += hit as usize;
        }
        assert_eq!(coverage(&a, &b), covered as f64 / 5.0);
        let c = coverage(&a, &b);
        assert!((0.0..=1.0).contains(&c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn ranking_is_scale_equivariant(seed in any::<u64>(), n in 2usize..60, k in 0usize..2, scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pop = random_population(&mut rng, n);
        let mut scaled = pop.clone();
        for d in &mut scaled {
            d.objectives[k] *= scale;
        }
        let fa = non_dominated_sort(&pop);
        prop_assert_eq!(&fa, &non_dominated_sort(&scaled));
        let (ra, ca) = rank_and_crowd(&pop);
        let (rb, cb) = rank_and_crowd(&scaled);
        prop_assert_eq!(&ra, &front_ranks(&fa, n));
        prop_assert_eq!(&ra, &rb);
        let mut s1 = substream(seed, Purpose::Selection, 0);
        let mut s2 = substream(seed, Purpose::Selection, 0);
        for _ in 0..50 {
            prop_assert_eq!(tournament_select(&ra, &ca, &mut s1), tournament_select(&rb, &cb, &mut s2));
        }
    }
}

#[test]
fn zdt1_short_run_approaches_the_front() {
    let cfg = OptimizerConfig {
        population_size: 100,
        max_generations: 250,
        seed: 5,
        reference_point: Some([1.0, 1.0]),
        ..Default::default()
    };
    let r = run(&cfg, &Zdt1::new(30)).unwrap();
    let hv = r.history.last().unwrap().hypervolume;
    assert!(hv >= 0.66, "{hv}");
    let front: Vec<Vec<f64>> = r.front.iter().map(|d| d.objectives.clone()).collect();
    assert_eq!(non_dominated(&front).len(), front.len());
}

#[test]
fn constrained_demo_front_avoids_the_disc() {
    let demo = ConstrainedDemo::default();
    let cfg = OptimizerConfig {
        population_size: 60,
        max_generations: 80,
        seed: 2,
        ..Default::default()
    };
    let r = run(&cfg, &demo).unwrap();
    assert!(!r.front.is_empty());
    for d in &r.front {
        let dist = (d.objectives[0] - DEMO_CENTER[0]).hypot(d.objectives[1] - DEMO_CENTER[1]);
        assert!(dist >= demo.radius, "front point inside the excluded disc: {:?}", d.objectives);
    }
    // the unconstrained optimum at the disc center is dominated by nothing
    // feasible, yet it is not on the returned front
    assert!(r.front.iter().all(|d| d.objectives != vec![0.5, 0.5]));
    // both outer parts of the unconstrained front are reached
    assert!(r.front.iter().any(|d| d.objectives[0] < 0.3 && d.objectives[0] + d.objectives[1] < 1.01));
    assert!(r.front.iter().any(|d| d.objectives[0] > 0.7 && d.objectives[0] + d.objectives[1] < 1.01));
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = OptimizerConfig {
        population_size: 40,
        max_generations: 30,
        seed: 9,
        ..Default::default()
    };
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run(&cfg, &ConstrainedDemo::default()).unwrap())
    };
    assert!(in_pool(1).same_outcome(&in_pool(4)));
}
