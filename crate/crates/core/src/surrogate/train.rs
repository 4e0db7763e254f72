use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::error::SurrogateError;
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    /// `None` disables early stopping.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_epochs: 500,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.2,
            patience: Some(50),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        let bad = |m: &str| Err(SurrogateError::InvalidConfig(m.into()));
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie strictly between 0 and 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment decay rates must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    /// Epoch (1-based) whose weights were returned.
    pub best_epoch: usize,
    pub n_train: usize,
    pub n_validation: usize,
    /// Mean minibatch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Full validation loss after each epoch; empty without a validation set.
    pub validation_loss: Vec<f64>,
    /// Training loss of the returned weights.
    pub final_train_loss: f64,
    /// Validation loss of the returned weights (training loss when there is
    /// no validation set).
    pub best_validation_loss: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Minibatch Adam on already-scaled data.
///
/// Weights are checkpointed on the best validation loss, or on the best
/// full training loss when `val_x` is empty. Early stopping counts epochs
/// since the last improvement of that same quantity.
pub fn fit(
    mut net: Network,
    train_x: &[Vec<f64>],
    train_y: &[Vec<f64>],
    val_x: &[Vec<f64>],
    val_y: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<(Network, TrainingMeta), SurrogateError> {
    if cfg.max_epochs == 0 || cfg.batch_size == 0 {
        return Err(SurrogateError::InvalidConfig(
            "max_epochs and batch_size must be at least 1".into(),
        ));
    }
    if train_x.is_empty() {
        return Err(SurrogateError::TooFewSamples { needed: 1, got: 0 });
    }
    let n = train_x.len();
    let mut adam = Adam::new(net.params.len());
    let mut grad = vec![0.0; net.params.len()];
    let mut tape = net.new_tape();
    let mut order: Vec<usize> = (0..n).collect();

    let mut best_params = net.params.clone();
    let mut best_score = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let mut rng = substream(cfg.seed, Purpose::Shuffle, epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for &i in batch {
                loss += net.accumulate(&train_x[i], &train_y[i], batch.len(), &mut tape, &mut grad);
            }
            epoch_loss += loss * batch.len() as f64 / n as f64;
            adam.step(&mut net.params, &grad, cfg);
        }
        train_hist.push(epoch_loss);
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(SurrogateError::InvalidConfig(format!(
                "training diverged at epoch {}",
                epoch + 1
            )));
        }

        let score = if val_x.is_empty() {
            net.loss(train_x, train_y)
        } else {
            let v = net.loss(val_x, val_y);
            val_hist.push(v);
            v
        };
        if score < best_score {
            best_score = score;
            best_params.copy_from_slice(&net.params);
            best_epoch = epoch + 1;
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }

    net.params = best_params;
    let meta = TrainingMeta {
        seed: cfg.seed,
        epochs_run: train_hist.len(),
        best_epoch,
        n_train: n,
        n_validation: val_x.len(),
        final_train_loss: net.loss(train_x, train_y),
        best_validation_loss: best_score,
        train_loss: train_hist,
        validation_loss: val_hist,
    };
    Ok((net, meta))
}
