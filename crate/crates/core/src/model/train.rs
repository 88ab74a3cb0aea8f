use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataSplit, Model};
use crate::error::{Error, Result};

/// Floor applied to the true-class probability inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

static CLAMPED: AtomicU64 = AtomicU64::new(0);

/// Number of times [`cross_entropy`] has clamped a zero probability in this
/// process.
pub fn clamp_warnings() -> u64 {
    CLAMPED.load(Ordering::Relaxed)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

/// `−log p_label` for a probability vector.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::ShapeMismatch {
            what: "label index",
            expected: probs.len(),
            actual: label,
        });
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbability(sum));
    }
    let p = probs[label];
    if p < PROB_FLOOR {
        CLAMPED.fetch_add(1, Ordering::Relaxed);
    }
    Ok(-p.max(PROB_FLOOR).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub alpha0: f64,
    /// Epoch period of the learning-rate decay.
    pub alpha_step: usize,
    /// Multiplicative learning-rate decay factor.
    pub alpha_factor: f64,
    pub weight_decay: f64,
    /// Global gradient-norm ceiling; `0` disables clipping.
    pub grad_clip: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            alpha0: 1e-3,
            alpha_step: 4,
            alpha_factor: 0.1,
            weight_decay: 1e-4,
            grad_clip: 1.0,
            seed: 0,
            batch_size: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return bad("alpha0 must be > 0");
        }
        if self.alpha_step == 0 {
            return bad("alpha_step must be >= 1");
        }
        if !(self.alpha_factor > 0.0 && self.alpha_factor <= 1.0) {
            return bad("alpha_factor must lie in (0, 1]");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        if !(self.grad_clip.is_finite() && self.grad_clip >= 0.0) {
            return bad("grad_clip must be >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        Ok(())
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.alpha0 * self.alpha_factor.powi((epoch / self.alpha_step) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains `model` in place and returns one record per epoch.
///
/// Each step averages per-sample gradients over a minibatch, adds the L2
/// weight-decay term, rescales to `grad_clip` global norm and applies Adam.
pub fn train(model: &mut Model, data: &DataSplit, cfg: &TrainConfig) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    data.train.validate()?;
    data.test.validate()?;
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::InvalidDataset("train and test splits must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut adam = Adam::new(model.param_count());
    let mut grad = vec![0.0; model.param_count()];
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &s in batch {
                let loss = model.backprop(&data.train.features[s], data.train.labels[s], &mut grad)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch: epoch + 1,
                        sample: s,
                    });
                }
                total += loss;
            }
            let scale = 1.0 / batch.len() as f64;
            for (g, p) in grad.iter_mut().zip(model.params()) {
                *g = *g * scale + cfg.weight_decay * p;
            }
            if cfg.grad_clip > 0.0 {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > cfg.grad_clip {
                    let k = cfg.grad_clip / norm;
                    grad.iter_mut().for_each(|g| *g *= k);
                }
            }
            adam.step(model.params_mut(), &grad, lr);
        }
        let train_loss = total / data.train.len() as f64;
        if !train_loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch: epoch + 1,
                sample: data.train.len(),
            });
        }
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            test_accuracy: model.accuracy(&data.test)?,
        });
    }
    Ok(history)
}
