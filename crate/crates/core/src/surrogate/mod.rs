//! Multi-branch neural meta-model from design parameters to intermediate
//! measures.

pub mod metrics;
pub mod network;
pub mod persist;
pub mod scaler;
pub mod train;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design_space::{DesignSpec, DesignVector, GeometryLimits};
use crate::error::SurrogateError;
use crate::machine_model::{evaluate_measures, grid_index, IntermediateMeasures, GRID_LEN, GRID_N};
use crate::postprocess::evaluate_kpis;
use crate::rng::{substream, Purpose};

pub use metrics::RegressionMetrics;
pub use network::{Architecture, HeadSpec, Network};
pub use persist::{load, save, FORMAT_VERSION};
pub use scaler::Scaler;
pub use train::{fit, TrainConfig, TrainingMeta};

pub const MIN_TRAINING_RECORDS: usize = 10;
/// Lower bound applied to predicted psi_ref.
pub const PSI_REF_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub design: DesignVector,
    pub measures: IntermediateMeasures,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn with_split(&self, split: Split) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Tags `n_test` records, picked by a seeded shuffle, as test data.
    /// Other tags are reset to `Train`.
    pub fn hold_out(&mut self, n_test: usize, seed: u64) {
        let mut idx: Vec<usize> = (0..self.records.len()).collect();
        idx.shuffle(&mut substream(seed, Purpose::Split, 1));
        self.records.iter_mut().for_each(|r| r.split = Split::Train);
        for &i in idx.iter().take(n_test) {
            self.records[i].split = Split::Test;
        }
    }
}

/// One reference record per design, in input order.
pub fn build_dataset(designs: &[DesignVector]) -> Dataset {
    build_dataset_with(designs, evaluate_measures)
}

pub fn build_dataset_with<F>(designs: &[DesignVector], reference: F) -> Dataset
where
    F: Fn(&DesignVector) -> IntermediateMeasures + Sync,
{
    let records = designs
        .par_iter()
        .map(|v| Record {
            design: v.clone(),
            measures: reference(v),
            split: Split::Train,
        })
        .collect();
    Dataset { records }
}

/// Training and validation indices used by [`train`].
///
/// Test records are never used. When some records are tagged
/// `Validation` they form the validation set; otherwise the `Train`
/// records are shuffled with the training seed and the first
/// `round(validation_fraction · n)` become validation data.
pub fn partition(ds: &Dataset, cfg: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let pick = |s: Split| -> Vec<usize> {
        (0..ds.len()).filter(|&i| ds.records[i].split == s).collect()
    };
    let tagged_val = pick(Split::Validation);
    let mut pool = pick(Split::Train);
    if !tagged_val.is_empty() {
        return (pool, tagged_val);
    }
    pool.shuffle(&mut substream(cfg.seed, Purpose::Split, 0));
    let n_val = ((cfg.validation_fraction * pool.len() as f64).round() as usize)
        .clamp(usize::from(pool.len() > 1), pool.len().saturating_sub(1));
    let train = pool.split_off(n_val);
    (train, pool)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaModel {
    pub network: Network,
    pub scaler: Scaler,
    /// Hash of the design spec the model was trained for.
    pub spec_hash: String,
    pub meta: TrainingMeta,
}

pub fn train(ds: &Dataset, spec: &DesignSpec, cfg: &TrainConfig) -> Result<MetaModel, SurrogateError> {
    cfg.validate()?;
    let (tr, va) = partition(ds, cfg);
    if tr.len() < MIN_TRAINING_RECORDS {
        return Err(SurrogateError::TooFewSamples {
            needed: MIN_TRAINING_RECORDS,
            got: tr.len(),
        });
    }
    let outputs = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| ds.records[i].measures.to_flat()).collect()
    };
    let train_raw = outputs(&tr);
    let scaler = Scaler::fit(spec, &train_raw);
    let xs = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| scaler.scale_input(ds.records[i].design.as_slice())).collect()
    };
    let train_y: Vec<Vec<f64>> = train_raw.iter().map(|y| scaler.scale_output(y)).collect();
    let val_y: Vec<Vec<f64>> = outputs(&va).iter().map(|y| scaler.scale_output(y)).collect();
    let arch = Architecture {
        inputs: spec.dim(),
        ..Architecture::default_machine()
    };
    let (network, meta) = fit(Network::init(arch, cfg.seed), &xs(&tr), &train_y, &xs(&va), &val_y, cfg)?;
    Ok(MetaModel {
        network,
        scaler,
        spec_hash: spec.hash(),
        meta,
    })
}

/// Forward pass, inverse scaling and structural repair.
pub fn predict(model: &MetaModel, v: &DesignVector) -> IntermediateMeasures {
    let z = model.network.forward(&model.scaler.scale_input(v.as_slice()));
    let mut m = IntermediateMeasures::from_flat(&model.scaler.unscale_output(&z));
    repair(&mut m);
    m
}

/// Clamps the loss coefficients and psi_ref and zeroes psi_q at zero
/// q-current.
pub fn repair(m: &mut IntermediateMeasures) {
    m.c_hy = m.c_hy.max(0.0);
    m.c_ed = m.c_ed.max(0.0);
    m.psi_ref = m.psi_ref.max(PSI_REF_FLOOR);
    for iu in 0..GRID_N {
        m.psi_q[grid_index(0, iu)] = 0.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub n: usize,
    /// Both flux grids.
    pub flux: RegressionMetrics,
    /// c_hy, c_ed and psi_ref together.
    pub scalar: RegressionMetrics,
    pub c_hy: RegressionMetrics,
    pub c_ed: RegressionMetrics,
    pub psi_ref: RegressionMetrics,
    pub max_power: RegressionMetrics,
    pub cost: RegressionMetrics,
}

/// Accuracy of predicted against reference measures, and of the KPIs each
/// measure source yields through the shared post-processing.
pub fn evaluate_predictions(
    designs: &[DesignVector],
    predicted: &[IntermediateMeasures],
    reference: &[IntermediateMeasures],
    limits: &GeometryLimits,
) -> ModelMetrics {
    let flat = |ms: &[IntermediateMeasures]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        ms.iter()
            .map(|m| {
                let f = m.to_flat();
                (f[..2 * GRID_LEN].to_vec(), f[2 * GRID_LEN..].to_vec())
            })
            .unzip()
    };
    let (pf, ps) = flat(predicted);
    let (rf, rs) = flat(reference);
    let col = |rows: &[Vec<f64>], j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let kpis: Vec<(f64, f64, f64, f64)> = designs
        .par_iter()
        .zip(predicted.par_iter().zip(reference.par_iter()))
        .map(|(v, (p, r))| {
            let (kp, _) = evaluate_kpis(v, p, limits);
            let (kr, _) = evaluate_kpis(v, r, limits);
            (kp.max_power_w, kr.max_power_w, kp.cost, kr.cost)
        })
        .collect();
    let pick = |f: fn(&(f64, f64, f64, f64)) -> f64| -> Vec<f64> { kpis.iter().map(f).collect() };
    ModelMetrics {
        n: designs.len(),
        flux: metrics::group_metrics(&pf, &rf),
        scalar: metrics::group_metrics(&ps, &rs),
        c_hy: metrics::scalar_metrics(&col(&ps, 0), &col(&rs, 0)),
        c_ed: metrics::scalar_metrics(&col(&ps, 1), &col(&rs, 1)),
        psi_ref: metrics::scalar_metrics(&col(&ps, 2), &col(&rs, 2)),
        max_power: metrics::scalar_metrics(&pick(|k| k.0), &pick(|k| k.1)),
        cost: metrics::scalar_metrics(&pick(|k| k.2), &pick(|k| k.3)),
    }
}

/// Metrics of `model` over the given records (typically the test split).
pub fn evaluate_model<'a, I>(model: &MetaModel, records: I, limits: &GeometryLimits) -> ModelMetrics
where
    I: IntoIterator<Item = &'a Record>,
{
    let records: Vec<&Record> = records.into_iter().collect();
    let designs: Vec<DesignVector> = records.iter().map(|r| r.design.clone()).collect();
    let predicted: Vec<IntermediateMeasures> = designs.par_iter().map(|v| predict(model, v)).collect();
    let reference: Vec<IntermediateMeasures> = records.iter().map(|r| r.measures.clone()).collect();
    evaluate_predictions(&designs, &predicted, &reference, limits)
}
