//! Classification heads on top of a 512-wide feature vector.
//!
//! * classical: `dense(in→n) → tanh → dense(n→m) → tanh → dense(m→k)`
//! * hybrid: `dense(in→n) → sigmoid → quantum layer(n qubits, depth q) → dense(n→k)`
//!
//! The hybrid encodes `ENCODING_SCALE · σ(z)` as rotation angles.
//!
//! Every dense layer carries a bias. Parameters live in one flat vector so
//! the optimizer, gradient clipping and checkpoints treat them uniformly.

mod data;
mod objective;
mod train;

use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{self, QuantumLayerSpec};

pub use data::{DataSplit, Dataset, SyntheticConfig};
pub use objective::{HyperParams, ModelObjective, ObjectiveSettings};
pub use train::{clamp_warnings, cross_entropy, softmax, train, EpochRecord, TrainConfig};

/// Width of the backbone feature vector the head consumes.
pub const BACKBONE_WIDTH: usize = 512;

/// Angle range of the hybrid input encoding.
pub const ENCODING_SCALE: f64 = std::f64::consts::PI;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Classical,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub input_dim: usize,
    /// Width of the first dense layer; also the qubit count of the hybrid.
    pub n: usize,
    /// Quantum circuit depth (hybrid only).
    pub q: usize,
    /// Hidden width of the second dense layer (classical only).
    pub m: usize,
    pub classes: usize,
}

impl ModelSpec {
    pub fn classical(n: usize, m: usize, classes: usize) -> Self {
        Self {
            variant: Variant::Classical,
            input_dim: BACKBONE_WIDTH,
            n,
            q: 0,
            m,
            classes,
        }
    }

    pub fn hybrid(n: usize, q: usize, classes: usize) -> Self {
        Self {
            variant: Variant::Hybrid,
            input_dim: BACKBONE_WIDTH,
            n,
            q,
            m: 0,
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInvalid(m));
        if self.input_dim == 0 || self.n == 0 {
            return bad("input_dim and n must be >= 1".into());
        }
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        match self.variant {
            Variant::Classical if self.m == 0 => bad("classical head needs m >= 1".into()),
            Variant::Hybrid => self.quantum().map(|_| ()),
            Variant::Classical => Ok(()),
        }
    }

    fn quantum(&self) -> Result<QuantumLayerSpec> {
        QuantumLayerSpec::new(self.n, self.q)
    }

    /// Named tensors in storage order with their shapes.
    pub fn tensor_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let (n, k) = (self.n, self.classes);
        match self.variant {
            Variant::Classical => vec![
                ("w1", vec![n, self.input_dim]),
                ("b1", vec![n]),
                ("w2", vec![self.m, n]),
                ("b2", vec![self.m]),
                ("w3", vec![k, self.m]),
                ("b3", vec![k]),
            ],
            Variant::Hybrid => vec![
                ("w1", vec![n, self.input_dim]),
                ("b1", vec![n]),
                ("theta", vec![self.q, n]),
                ("w3", vec![k, n]),
                ("b3", vec![k]),
            ],
        }
    }

    /// Total trainable parameters, biases and variational angles included.
    pub fn param_count(&self) -> usize {
        let (i, n, k) = (self.input_dim, self.n, self.classes);
        match self.variant {
            Variant::Classical => (i + 1) * n + (n + 1) * self.m + (self.m + 1) * k,
            Variant::Hybrid => (i + 1) * n + n * self.q + (n + 1) * k,
        }
    }

    pub fn variational_count(&self) -> usize {
        match self.variant {
            Variant::Classical => 0,
            Variant::Hybrid => self.n * self.q,
        }
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    /// `w2` (classical) or `theta` (hybrid).
    pub mid: Range<usize>,
    pub b2: Range<usize>,
    pub w3: Range<usize>,
    pub b3: Range<usize>,
}

impl Layout {
    fn new(spec: &ModelSpec) -> Self {
        let mut at = 0;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let (i, n, k) = (spec.input_dim, spec.n, spec.classes);
        match spec.variant {
            Variant::Classical => Layout {
                w1: take(n * i),
                b1: take(n),
                mid: take(spec.m * n),
                b2: take(spec.m),
                w3: take(k * spec.m),
                b3: take(k),
            },
            Variant::Hybrid => {
                let w1 = take(n * i);
                let b1 = take(n);
                let mid = take(n * spec.q);
                let b2 = mid.end..mid.end;
                Layout {
                    w1,
                    b1,
                    mid,
                    b2,
                    w3: take(k * n),
                    b3: take(k),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    quantum: Option<QuantumLayerSpec>,
    layout: Layout,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub z1: Vec<f64>,
    /// Encoded angles (hybrid only).
    pub angles: Vec<f64>,
    /// tanh(z1) (classical) or the quantum layer outputs (hybrid).
    pub h1: Vec<f64>,
    /// tanh(z2); empty for the hybrid.
    pub h2: Vec<f64>,
    pub probs: Vec<f64>,
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(o, bias)| bias + w[o * cols..(o + 1) * cols].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Builds a model with seeded initial weights: dense layers uniform in
/// `±1/√fan_in`, variational angles uniform in `[−π, π]`.
pub fn build(spec: &ModelSpec, seed: u64) -> Result<Model> {
    spec.validate()?;
    let quantum = match spec.variant {
        Variant::Hybrid => Some(spec.quantum()?),
        Variant::Classical => None,
    };
    let layout = Layout::new(spec);
    let mut params = vec![0.0; spec.param_count()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |range: Range<usize>, bound: f64| {
        for p in &mut params[range] {
            *p = rng.random_range(-bound..=bound);
        }
    };
    let fan = |f: usize| 1.0 / (f as f64).sqrt();
    fill(layout.w1.clone(), fan(spec.input_dim));
    fill(layout.b1.clone(), fan(spec.input_dim));
    match spec.variant {
        Variant::Classical => {
            fill(layout.mid.clone(), fan(spec.n));
            fill(layout.b2.clone(), fan(spec.n));
            fill(layout.w3.clone(), fan(spec.m));
            fill(layout.b3.clone(), fan(spec.m));
        }
        Variant::Hybrid => {
            fill(layout.mid.clone(), std::f64::consts::PI);
            fill(layout.w3.clone(), fan(spec.n));
            fill(layout.b3.clone(), fan(spec.n));
        }
    }
    Ok(Model {
        spec: spec.clone(),
        quantum,
        layout,
        params,
    })
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn variational_count(&self) -> usize {
        self.spec.variational_count()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    #[cfg(test)]
    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::ShapeMismatch {
                what: "model input",
                expected: self.spec.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let l = &self.layout;
        let p = &self.params;
        let z1 = affine(&p[l.w1.clone()], &p[l.b1.clone()], x);
        let (angles, h1, h2, logits) = match &self.quantum {
            None => {
                let h1: Vec<f64> = z1.iter().map(|v| v.tanh()).collect();
                let h2: Vec<f64> = affine(&p[l.mid.clone()], &p[l.b2.clone()], &h1)
                    .iter()
                    .map(|v| v.tanh())
                    .collect();
                let logits = affine(&p[l.w3.clone()], &p[l.b3.clone()], &h2);
                (Vec::new(), h1, h2, logits)
            }
            Some(q) => {
                let angles: Vec<f64> = z1.iter().map(|&z| ENCODING_SCALE * sigmoid(z)).collect();
                let h1 = quantum::forward(q, &angles, &p[l.mid.clone()])?;
                let logits = affine(&p[l.w3.clone()], &p[l.b3.clone()], &h1);
                (angles, h1, Vec::new(), logits)
            }
        };
        Ok(Trace {
            z1,
            angles,
            h1,
            h2,
            probs: softmax(&logits),
        })
    }

    /// Class probabilities for one feature vector.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.probs)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let probs = self.predict_proba(x)?;
        Ok(argmax(&probs))
    }

    /// Fraction of correctly classified rows.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        let mut correct = 0usize;
        for (x, &y) in data.features.iter().zip(&data.labels) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    /// Accumulates `∂loss/∂params` for one sample into `grad`; returns the loss.
    pub(crate) fn backprop(&self, x: &[f64], label: usize, grad: &mut [f64]) -> Result<f64> {
        let t = self.trace(x)?;
        let loss = cross_entropy(&t.probs, label)?;
        let l = &self.layout;
        let p = &self.params;
        let k = self.spec.classes;
        let mut dlogits = t.probs.clone();
        dlogits[label] -= 1.0;

        let top_in: &[f64] = match self.quantum {
            None => &t.h2,
            Some(_) => &t.h1,
        };
        let width = top_in.len();
        let w3 = &p[l.w3.clone()];
        let mut dtop = vec![0.0; width];
        for o in 0..k {
            grad[l.b3.start + o] += dlogits[o];
            for j in 0..width {
                grad[l.w3.start + o * width + j] += dlogits[o] * top_in[j];
                dtop[j] += dlogits[o] * w3[o * width + j];
            }
        }

        let dz1: Vec<f64> = match &self.quantum {
            None => {
                let dz2: Vec<f64> = dtop.iter().zip(&t.h2).map(|(g, h)| g * (1.0 - h * h)).collect();
                let n = self.spec.n;
                let w2 = &p[l.mid.clone()];
                let mut dh1 = vec![0.0; n];
                for o in 0..self.spec.m {
                    grad[l.b2.start + o] += dz2[o];
                    for j in 0..n {
                        grad[l.mid.start + o * n + j] += dz2[o] * t.h1[j];
                        dh1[j] += dz2[o] * w2[o * n + j];
                    }
                }
                dh1.iter().zip(&t.h1).map(|(g, h)| g * (1.0 - h * h)).collect()
            }
            Some(q) => {
                let jac = quantum::gradient(q, &t.angles, &p[l.mid.clone()])?;
                let n = q.qubits;
                let np = q.num_params();
                for i in 0..n {
                    for k in 0..np {
                        grad[l.mid.start + k] += dtop[i] * jac.wrt_params[i * np + k];
                    }
                }
                (0..n)
                    .map(|j| {
                        let s = sigmoid(t.z1[j]);
                        let dangle: f64 = (0..n).map(|i| dtop[i] * jac.wrt_inputs[i * n + j]).sum();
                        dangle * ENCODING_SCALE * s * (1.0 - s)
                    })
                    .collect()
            }
        };

        let d_in = self.spec.input_dim;
        for o in 0..self.spec.n {
            grad[l.b1.start + o] += dz1[o];
            let row = &mut grad[l.w1.start + o * d_in..l.w1.start + (o + 1) * d_in];
            for (g, v) in row.iter_mut().zip(x) {
                *g += dz1[o] * v;
            }
        }
        Ok(loss)
    }

    /// Mean cross-entropy over the rows of `data`.
    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        let mut total = 0.0;
        for (x, &y) in data.features.iter().zip(&data.labels) {
            total += cross_entropy(&self.predict_proba(x)?, y)?;
        }
        Ok(total / data.len().max(1) as f64)
    }

    /// Mean loss and its gradient with respect to the flat parameters.
    pub fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        for (x, &y) in data.features.iter().zip(&data.labels) {
            total += self.backprop(x, y, &mut grad)?;
        }
        let scale = 1.0 / data.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((total * scale, grad))
    }

    /// Writes the flat parameters to `path` (one value per line) and a JSON
    /// manifest of tensor shapes to `path` with `.manifest.json` appended.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut text = String::with_capacity(self.params.len() * 24);
        for v in &self.params {
            text.push_str(&format!("{v:?}\n"));
        }
        std::fs::write(path, text)?;
        let manifest = Manifest {
            spec: self.spec.clone(),
            tensors: self
                .spec
                .tensor_shapes()
                .into_iter()
                .map(|(name, shape)| TensorEntry {
                    name: name.to_string(),
                    shape,
                })
                .collect(),
            total: self.params.len(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        std::fs::write(manifest_path(path), json)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Model> {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path(path))?)
            .map_err(|e| Error::SpecInvalid(format!("bad manifest: {e}")))?;
        let mut model = build(&manifest.spec, 0)?;
        let values = std::fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|e| Error::SpecInvalid(format!("bad value `{l}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let expected: usize = manifest.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        if values.len() != model.params.len() || expected != values.len() || manifest.total != values.len() {
            return Err(Error::ShapeMismatch {
                what: "checkpoint values",
                expected: model.params.len(),
                actual: values.len(),
            });
        }
        model.params = values;
        Ok(model)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    spec: ModelSpec,
    tensors: Vec<TensorEntry>,
    total: usize,
}

fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    s.into()
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn target_parameter_counts() {
        let hybrid = build(&ModelSpec::hybrid(13, 4, 2), 0).unwrap();
        assert_eq!(hybrid.param_count(), 6749);
        assert_eq!(hybrid.variational_count(), 52);
        let classical = build(&ModelSpec::classical(16, 80, 2), 0).unwrap();
        assert_eq!(classical.param_count(), 9730);
        assert_eq!(ModelSpec::classical(5, 80, 2).param_count(), 3207);
        assert_eq!(build(&ModelSpec::hybrid(1, 1, 2), 0).unwrap().param_count(), 518);
    }

    #[test]
    fn invalid_specs() {
        assert!(build(&ModelSpec::classical(4, 0, 2), 0).is_err());
        assert!(build(&ModelSpec::hybrid(4, 0, 2), 0).is_err());
        assert!(build(&ModelSpec::hybrid(4, 2, 1), 0).is_err());
        assert!(build(&ModelSpec::hybrid(17, 2, 2), 0).is_err());
    }

    #[test]
    fn init_ranges_and_seed() {
        let spec = ModelSpec::hybrid(4, 2, 2);
        let a = build(&spec, 5).unwrap();
        assert_eq!(a, build(&spec, 5).unwrap());
        assert_ne!(a.params(), build(&spec, 6).unwrap().params());
        let l = a.layout();
        let bound = 1.0 / (512f64).sqrt();
        assert!(a.params()[l.w1.clone()].iter().all(|v| v.abs() <= bound));
        assert!(a.params()[l.mid.clone()].iter().all(|v| v.abs() <= std::f64::consts::PI));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = std::env::temp_dir().join(format!("tensorhpo-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.txt");
        let model = build(&ModelSpec::hybrid(3, 2, 2), 11).unwrap();
        model.save_checkpoint(&path).unwrap();
        let loaded = Model::load_checkpoint(&path).unwrap();
        assert_eq!(loaded, model);
        std::fs::write(&path, "1.0\n").unwrap();
        assert!(Model::load_checkpoint(&path).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn count_formula_matches_layout(n in 4usize..=16, q in 1usize..=5, m in 4usize..=80, k in 2usize..=5) {
            let h = ModelSpec::hybrid(n, q, k);
            let shapes: usize = h.tensor_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum();
            prop_assert_eq!(h.param_count(), shapes);
            prop_assert_eq!(h.param_count(), 513 * n + n * q + (n + 1) * k);
            let c = ModelSpec::classical(n, m, k);
            let shapes: usize = c.tensor_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum();
            prop_assert_eq!(c.param_count(), shapes);
            prop_assert_eq!(c.param_count(), 513 * n + (n + 1) * m + (m + 1) * k);
        }
    }
}
