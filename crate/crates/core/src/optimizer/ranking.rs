//! Constraint-dominated ranking and crowding distance.

/// Anything that can be ranked: objective values (minimized) plus a total
/// constraint violation, zero when feasible.
pub trait Ranked {
    fn objectives(&self) -> &[f64];
    fn violation(&self) -> f64;

    fn is_feasible(&self) -> bool {
        self.violation() == 0.0
    }
}

/// Pareto dominance on objective vectors, minimization.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Weak dominance: no worse in every objective.
pub fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Constraint domination: feasibility first, then smaller violation, then
/// Pareto dominance among feasible members.
pub fn dominates<T: Ranked + ?Sized>(a: &T, b: &T) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation() < b.violation(),
        (true, true) => pareto_dominates(a.objectives(), b.objectives()),
    }
}

/// Fronts of indices into `pop`, best first; each front lists indices in
/// ascending order.
pub fn non_dominated_sort<T: Ranked>(pop: &[T]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&pop[i], &pop[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&pop[j], &pop[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Front rank (0 = best) of every member.
pub fn front_ranks(fronts: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut rank = vec![0; n];
    for (r, f) in fronts.iter().enumerate() {
        for &i in f {
            rank[i] = r;
        }
    }
    rank
}

/// Crowding distance of each objective vector in one front.
///
/// Boundary members of every objective get +∞. An objective whose range
/// is zero or not finite adds nothing, boundaries included.
pub fn crowding_distance(front: &[&[f64]]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let range = front[order[n - 1]][k] - front[order[0]][k];
        if !(range.is_finite() && range > 0.0) {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in 1..n.saturating_sub(1) {
            let gap = (front[order[w + 1]][k] - front[order[w - 1]][k]) / range;
            if gap.is_finite() {
                dist[order[w]] += gap;
            }
        }
    }
    dist
}
