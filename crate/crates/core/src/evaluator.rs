//! Machine-design problems for the optimizer: the classical path with the
//! reference model and the hybrid path with a trained surrogate.

use std::time::Instant;

use crate::design_space::{geometry_check, DesignSpec, DesignVector};
use crate::machine_model::{evaluate_measures, IntermediateMeasures};
use crate::optimizer::{Evaluation, EvaluatorTag, Problem};
use crate::postprocess::{evaluate_kpis, N_CONSTRAINTS};
use crate::surrogate::{predict, MetaModel};

/// Producer of intermediate measures.
pub trait MeasureSource: Sync {
    fn tag(&self) -> EvaluatorTag;
    fn measures(&self, v: &DesignVector) -> IntermediateMeasures;
}

/// The analytical reference model.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceModel;

impl MeasureSource for ReferenceModel {
    fn tag(&self) -> EvaluatorTag {
        EvaluatorTag::Reference
    }

    fn measures(&self, v: &DesignVector) -> IntermediateMeasures {
        evaluate_measures(v)
    }
}

impl MeasureSource for MetaModel {
    fn tag(&self) -> EvaluatorTag {
        EvaluatorTag::Surrogate
    }

    fn measures(&self, v: &DesignVector) -> IntermediateMeasures {
        predict(self, v)
    }
}

/// Objectives (−max power, cost) and constraints (torque, five geometry
/// checks) of a machine design.
///
/// Geometry-infeasible designs are not passed to the measure source; they
/// get +∞ objectives, a zero torque constraint and their geometry values.
#[derive(Debug, Clone)]
pub struct MachineProblem<S> {
    pub spec: DesignSpec,
    pub source: S,
}

pub type ClassicalProblem = MachineProblem<ReferenceModel>;
pub type HybridProblem = MachineProblem<MetaModel>;

impl ClassicalProblem {
    pub fn classical(spec: DesignSpec) -> Self {
        Self {
            spec,
            source: ReferenceModel,
        }
    }
}

impl HybridProblem {
    pub fn hybrid(spec: DesignSpec, model: MetaModel) -> Self {
        Self { spec, source: model }
    }
}

impl<S: MeasureSource> Problem for MachineProblem<S> {
    fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    fn tag(&self) -> EvaluatorTag {
        self.source.tag()
    }

    fn geometry_feasible(&self, v: &DesignVector) -> bool {
        geometry_check(v, &self.spec.limits).feasible
    }

    fn evaluate(&self, v: &DesignVector) -> Result<Evaluation, String> {
        let geo = geometry_check(v, &self.spec.limits);
        if !geo.feasible {
            let mut c = vec![0.0; N_CONSTRAINTS];
            c[1..].copy_from_slice(&geo.values);
            return Ok(Evaluation {
                objectives: vec![f64::INFINITY; 2],
                constraints: c,
                measures: None,
                physics_evaluated: false,
                measure_seconds: 0.0,
                postprocess_seconds: 0.0,
            });
        }
        let t = Instant::now();
        let m = self.source.measures(v);
        let measure_seconds = t.elapsed().as_secs_f64();
        if m.psi_d.iter().chain(&m.psi_q).chain([&m.c_hy, &m.c_ed, &m.psi_ref]).any(|x| !x.is_finite()) {
            return Err("non-finite intermediate measures".into());
        }
        let t = Instant::now();
        let (k, c) = evaluate_kpis(v, &m, &self.spec.limits);
        let postprocess_seconds = t.elapsed().as_secs_f64();
        if !k.max_power_w.is_finite() {
            return Err(format!("non-finite maximum power {}", k.max_power_w));
        }
        Ok(Evaluation {
            objectives: k.objectives().to_vec(),
            constraints: c.0.to_vec(),
            measures: Some(m),
            physics_evaluated: true,
            measure_seconds,
            postprocess_seconds,
        })
    }
}
