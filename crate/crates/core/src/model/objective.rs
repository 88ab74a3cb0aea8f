use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{build, train, DataSplit, ModelSpec, TrainConfig, Variant};
use crate::error::{Error, Result};
use crate::evaluator::Objective;
use crate::search_space::{AxisSpec, GridPoint, SearchSpace};

/// The five tuned hyperparameters resolved from a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n: usize,
    /// Circuit depth (hybrid) or hidden width (classical).
    pub width: usize,
    pub alpha0: f64,
    pub alpha_step: usize,
    pub alpha_factor: f64,
}

/// Everything held fixed while the hyperparameters vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSettings {
    pub classes: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub grad_clip: f64,
    pub batch_size: usize,
    /// Seeds both weight initialization and minibatch shuffling.
    pub seed: u64,
}

impl Default for ObjectiveSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            classes: 2,
            epochs: t.epochs,
            weight_decay: t.weight_decay,
            grad_clip: t.grad_clip,
            batch_size: t.batch_size,
            seed: 0,
        }
    }
}

const AXES: [&str; 5] = ["n", "width", "alpha0", "alpha_step", "alpha_factor"];

/// Name of the second axis for each variant.
fn width_axis(variant: Variant) -> &'static str {
    match variant {
        Variant::Hybrid => "q",
        Variant::Classical => "nq",
    }
}

/// Test accuracy after training, as a function of the hyperparameters.
#[derive(Debug, Clone)]
pub struct ModelObjective {
    variant: Variant,
    data: Arc<DataSplit>,
    settings: ObjectiveSettings,
    /// Positions of n, width, alpha0, alpha_step, alpha_factor in the space.
    slots: [usize; 5],
}

impl ModelObjective {
    pub fn new(variant: Variant, data: Arc<DataSplit>, settings: ObjectiveSettings, space: &SearchSpace) -> Result<Self> {
        let mut slots = [0; 5];
        for (slot, name) in slots.iter_mut().zip(AXES) {
            let name = if name == "width" { width_axis(variant) } else { name };
            *slot = space
                .axis_index(name)
                .ok_or_else(|| Error::InvalidSpace(format!("model objective needs an axis named `{name}`")))?;
        }
        if space.dim() != 5 {
            return Err(Error::InvalidSpace(format!(
                "model objective expects 5 axes, got {}",
                space.dim()
            )));
        }
        Ok(Self {
            variant,
            data,
            settings,
            slots,
        })
    }

    /// The tuned ranges: n 4–16, q 1–5 or nq 4–80, α0 1e-4–1e-3, αδ 1–8,
    /// αr 0.1–0.2.
    pub fn default_space(variant: Variant, points: usize) -> Result<SearchSpace> {
        let p = points;
        let width = match variant {
            Variant::Hybrid => AxisSpec::integer("q", 1.0, 5.0, p),
            Variant::Classical => AxisSpec::integer("nq", 4.0, 80.0, p),
        };
        SearchSpace::new(vec![
            AxisSpec::integer("n", 4.0, 16.0, p),
            width,
            AxisSpec::continuous("alpha0", 1e-4, 1e-3, p),
            AxisSpec::integer("alpha_step", 1.0, 8.0, p),
            AxisSpec::continuous("alpha_factor", 0.1, 0.2, p),
        ])
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn hyperparams(&self, point: &GridPoint) -> Result<HyperParams> {
        let v = |slot: usize| point.values[self.slots[slot]];
        let count = |slot: usize| -> Result<usize> {
            let x = v(slot);
            if x.fract() != 0.0 || x < 1.0 {
                return Err(Error::SpecInvalid(format!("{} must be a positive integer, got {x}", AXES[slot])));
            }
            Ok(x as usize)
        };
        Ok(HyperParams {
            n: count(0)?,
            width: count(1)?,
            alpha0: v(2),
            alpha_step: count(3)?,
            alpha_factor: v(4),
        })
    }

    pub fn spec(&self, hp: &HyperParams) -> ModelSpec {
        let k = self.settings.classes;
        match self.variant {
            Variant::Hybrid => ModelSpec::hybrid(hp.n, hp.width, k),
            Variant::Classical => ModelSpec::classical(hp.n, hp.width, k),
        }
    }

    pub fn train_config(&self, hp: &HyperParams) -> TrainConfig {
        TrainConfig {
            epochs: self.settings.epochs,
            alpha0: hp.alpha0,
            alpha_step: hp.alpha_step,
            alpha_factor: hp.alpha_factor,
            weight_decay: self.settings.weight_decay,
            grad_clip: self.settings.grad_clip,
            seed: self.settings.seed,
            batch_size: self.settings.batch_size,
        }
    }

    /// Builds, trains and returns the final test accuracy.
    pub fn accuracy(&self, point: &GridPoint) -> Result<f64> {
        let hp = self.hyperparams(point)?;
        let mut model = build(&self.spec(&hp), self.settings.seed)?;
        let history = train(&mut model, &self.data, &self.train_config(&hp))?;
        match history.last() {
            Some(r) => Ok(r.test_accuracy),
            None => model.accuracy(&self.data.test),
        }
    }
}

impl Objective for ModelObjective {
    fn evaluate(&self, point: &GridPoint) -> Result<f64> {
        self.accuracy(point)
    }
}
