//! Analytic test problems with known Pareto fronts.

use super::{Evaluation, Problem};
use crate::design_space::{DesignSpec, DesignVector};

fn zdt_g(v: &DesignVector) -> f64 {
    let n = v.len();
    1.0 + 9.0 * v.iter().skip(1).sum::<f64>() / (n - 1) as f64
}

/// ZDT1: convex front f2 = 1 − √f1.
#[derive(Debug, Clone)]
pub struct Zdt1 {
    spec: DesignSpec,
}

impl Zdt1 {
    pub fn new(n_vars: usize) -> Self {
        assert!(n_vars >= 2);
        Self {
            spec: DesignSpec::unit_box(n_vars),
        }
    }

    pub fn true_front(samples: usize) -> Vec<Vec<f64>> {
        (0..samples)
            .map(|i| {
                let f1 = i as f64 / (samples - 1) as f64;
                vec![f1, 1.0 - f1.sqrt()]
            })
            .collect()
    }
}

impl Problem for Zdt1 {
    fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    fn evaluate(&self, v: &DesignVector) -> Result<Evaluation, String> {
        let f1 = v[0];
        let g = zdt_g(v);
        Ok(Evaluation::new(vec![f1, g * (1.0 - (f1 / g).sqrt())], vec![]))
    }
}

/// ZDT2: concave front f2 = 1 − f1².
#[derive(Debug, Clone)]
pub struct Zdt2 {
    spec: DesignSpec,
}

impl Zdt2 {
    pub fn new(n_vars: usize) -> Self {
        assert!(n_vars >= 2);
        Self {
            spec: DesignSpec::unit_box(n_vars),
        }
    }

    pub fn true_front(samples: usize) -> Vec<Vec<f64>> {
        (0..samples)
            .map(|i| {
                let f1 = i as f64 / (samples - 1) as f64;
                vec![f1, 1.0 - f1 * f1]
            })
            .collect()
    }
}

impl Problem for Zdt2 {
    fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    fn evaluate(&self, v: &DesignVector) -> Result<Evaluation, String> {
        let f1 = v[0];
        let g = zdt_g(v);
        Ok(Evaluation::new(vec![f1, g * (1.0 - (f1 / g).powi(2))], vec![]))
    }
}

/// Linear front f1 + f2 = 1 with a disc around (0.5, 0.5) cut out of the
/// objective space.
///
/// f1 = x1, f2 = 1 − x1 + x2, feasible when the objective point lies at
/// least `radius` away from the disc center. The unconstrained optimum
/// segment through the disc is therefore excluded.
#[derive(Debug, Clone)]
pub struct ConstrainedDemo {
    spec: DesignSpec,
    pub radius: f64,
}

impl Default for ConstrainedDemo {
    fn default() -> Self {
        Self {
            spec: DesignSpec::unit_box(2),
            radius: 0.2,
        }
    }
}

pub const DEMO_CENTER: [f64; 2] = [0.5, 0.5];

impl ConstrainedDemo {
    pub fn objectives(v: &DesignVector) -> [f64; 2] {
        [v[0], 1.0 - v[0] + v[1]]
    }

    pub fn constraint(&self, f: [f64; 2]) -> f64 {
        self.radius - (f[0] - DEMO_CENTER[0]).hypot(f[1] - DEMO_CENTER[1])
    }
}

impl Problem for ConstrainedDemo {
    fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    fn evaluate(&self, v: &DesignVector) -> Result<Evaluation, String> {
        let f = Self::objectives(v);
        Ok(Evaluation::new(f.to_vec(), vec![self.constraint(f)]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::hypervolume_2d;

    #[test]
    fn optimal_designs_land_on_the_true_fronts() {
        let p1 = Zdt1::new(30);
        let p2 = Zdt2::new(30);
        for i in 0..=10 {
            let mut x = vec![0.0; 30];
            x[0] = i as f64 / 10.0;
            let v = DesignVector(x);
            let f = p1.evaluate(&v).unwrap().objectives;
            assert!((f[1] - (1.0 - f[0].sqrt())).abs() < 1e-15);
            let f = p2.evaluate(&v).unwrap().objectives;
            assert!((f[1] - (1.0 - f[0] * f[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_true_fronts_approach_analytic_hypervolume() {
        let pts = |f: Vec<Vec<f64>>| -> Vec<[f64; 2]> { f.iter().map(|p| [p[0], p[1]]).collect() };
        let hv1 = hypervolume_2d(&pts(Zdt1::true_front(100_001)), [1.0, 1.0]);
        let hv2 = hypervolume_2d(&pts(Zdt2::true_front(100_001)), [1.0, 1.0]);
        assert!((hv1 - 2.0 / 3.0).abs() < 1e-4);
        assert!((hv2 - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn demo_constraint_excludes_the_center() {
        let d = ConstrainedDemo::default();
        let v = DesignVector(vec![0.5, 0.0]);
        let e = d.evaluate(&v).unwrap();
        assert!((e.constraints[0] - 0.2).abs() < 1e-15);
        let far = DesignVector(vec![0.0, 0.0]);
        assert!(d.evaluate(&far).unwrap().constraints[0] < 0.0);
    }
}
