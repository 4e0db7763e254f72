use std::collections::HashSet;

use super::ranking::{pareto_dominates, Ranked};
use super::EvaluatedDesign;
use crate::design_space::DesignVector;

/// Dedupe key: every coordinate rounded to six significant digits.
pub fn dedupe_key(v: &DesignVector) -> String {
    v.iter()
        .map(|x| format!("{:.5e}", x + 0.0))
        .collect::<Vec<_>>()
        .join(",")
}

/// Append-only store of evaluated designs with an incrementally maintained
/// feasible Pareto front.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    members: Vec<EvaluatedDesign>,
    keys: HashSet<String>,
    front: Vec<usize>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `d` unless a design with the same key is already present.
    pub fn insert(&mut self, d: EvaluatedDesign) -> bool {
        if !self.keys.insert(dedupe_key(&d.design)) {
            return false;
        }
        let idx = self.members.len();
        if d.is_feasible() {
            let obj = d.objectives.as_slice();
            let dominated = self
                .front
                .iter()
                .any(|&j| pareto_dominates(&self.members[j].objectives, obj));
            if !dominated {
                let members = &self.members;
                self.front.retain(|&j| !pareto_dominates(obj, &members[j].objectives));
                self.front.push(idx);
            }
        }
        self.members.push(d);
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[EvaluatedDesign] {
        &self.members
    }

    pub fn contains(&self, v: &DesignVector) -> bool {
        self.keys.contains(&dedupe_key(v))
    }

    /// Feasible, mutually non-dominated members in insertion order.
    pub fn pareto_front(&self) -> Vec<&EvaluatedDesign> {
        let mut idx = self.front.clone();
        idx.sort_unstable();
        idx.into_iter().map(|i| &self.members[i]).collect()
    }

    pub fn into_members(self) -> Vec<EvaluatedDesign> {
        self.members
    }
}
