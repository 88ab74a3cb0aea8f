//! Exact statevector simulation of the classifier's quantum layer.
//!
//! Circuit for `n` qubits and depth `q`, starting from `|0…0⟩`:
//!
//! 1. `H` on every qubit;
//! 2. `RY(x_i)` on qubit `i` (angle encoding of the layer input);
//! 3. `q` variational layers, each a ring of CNOTs (`i → (i+1) mod n` for
//!    ascending `i`, skipped when `n == 1`) followed by one parametrized
//!    rotation per qubit about the axis given by the [`AxisSchedule`];
//! 4. readout of `⟨X_i⟩` for every qubit.
//!
//! Qubit `i` is bit `i` of the basis-state index (little-endian).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported register; `2^16` amplitudes.
pub const MAX_QUBITS: usize = 16;
/// Largest supported variational depth.
pub const MAX_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

/// Rotation axis used by each variational layer.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSchedule {
    /// Layer `ℓ` rotates about X, Y, Z for `ℓ mod 3 = 0, 1, 2`.
    #[default]
    Cycle,
    Fixed(RotationAxis),
    /// Explicit axis per layer; must list `depth` entries.
    PerLayer(Vec<RotationAxis>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumLayerSpec {
    pub qubits: usize,
    pub depth: usize,
    #[serde(default)]
    pub schedule: AxisSchedule,
}

impl QuantumLayerSpec {
    pub fn new(qubits: usize, depth: usize) -> Result<Self> {
        let spec = Self {
            qubits,
            depth,
            schedule: AxisSchedule::Cycle,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > MAX_QUBITS {
            return Err(Error::SpecInvalid(format!(
                "qubits must be in 1..={MAX_QUBITS}, got {}",
                self.qubits
            )));
        }
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(Error::SpecInvalid(format!(
                "depth must be in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        if let AxisSchedule::PerLayer(axes) = &self.schedule {
            if axes.len() != self.depth {
                return Err(Error::SpecInvalid(format!(
                    "axis schedule lists {} layers, depth is {}",
                    axes.len(),
                    self.depth
                )));
            }
        }
        Ok(())
    }

    /// Number of variational angles, `qubits · depth`.
    pub fn num_params(&self) -> usize {
        self.qubits * self.depth
    }

    pub fn layer_axis(&self, layer: usize) -> RotationAxis {
        match &self.schedule {
            AxisSchedule::Cycle => [RotationAxis::X, RotationAxis::Y, RotationAxis::Z][layer % 3],
            AxisSchedule::Fixed(axis) => *axis,
            AxisSchedule::PerLayer(axes) => axes[layer],
        }
    }

    /// The full gate sequence for inputs `x` and angles `theta`.
    pub fn circuit(&self, x: &[f64], theta: &[f64]) -> Result<Vec<Gate>> {
        self.validate()?;
        let n = self.qubits;
        if x.len() != n {
            return Err(Error::ShapeMismatch {
                what: "quantum layer input",
                expected: n,
                actual: x.len(),
            });
        }
        if theta.len() != self.num_params() {
            return Err(Error::ShapeMismatch {
                what: "variational parameters",
                expected: self.num_params(),
                actual: theta.len(),
            });
        }
        let mut gates = Vec::with_capacity(2 * n + self.depth * 2 * n);
        gates.extend((0..n).map(Gate::H));
        gates.extend(x.iter().enumerate().map(|(i, &a)| Gate::RY(i, a)));
        for layer in 0..self.depth {
            if n > 1 {
                gates.extend((0..n).map(|i| Gate::Cnot {
                    control: i,
                    target: (i + 1) % n,
                }));
            }
            let axis = self.layer_axis(layer);
            for i in 0..n {
                let angle = theta[layer * n + i];
                gates.push(match axis {
                    RotationAxis::X => Gate::RX(i, angle),
                    RotationAxis::Y => Gate::RY(i, angle),
                    RotationAxis::Z => Gate::RZ(i, angle),
                });
            }
        }
        Ok(gates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    RX(usize, f64),
    RY(usize, f64),
    RZ(usize, f64),
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// 2×2 unitary `[[u00, u01], [u10, u11]]` of a single-qubit gate.
    pub fn matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Some(match *self {
            Gate::H(_) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
            }
            Gate::RX(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            Gate::RY(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            Gate::RZ(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
            }
            Gate::Cnot { .. } => return None,
        })
    }

    fn wires(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(w) | Gate::RX(w, _) | Gate::RY(w, _) | Gate::RZ(w, _) => (w, None),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::SpecInvalid(format!(
                "qubits must be in 1..={MAX_QUBITS}, got {qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(Error::ShapeMismatch {
                what: "amplitude vector length (power of two)",
                expected: len.next_power_of_two().max(2),
                actual: len,
            });
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        let (a, b) = gate.wires();
        for w in std::iter::once(a).chain(b) {
            if w >= self.qubits {
                return Err(Error::WireOutOfRange {
                    wire: w,
                    qubits: self.qubits,
                });
            }
        }
        match (gate.matrix(), b) {
            (Some(u), _) => {
                let mask = 1usize << a;
                for k in (0..self.amps.len()).filter(|k| k & mask == 0) {
                    let (x0, x1) = (self.amps[k], self.amps[k | mask]);
                    self.amps[k] = u[0][0] * x0 + u[0][1] * x1;
                    self.amps[k | mask] = u[1][0] * x0 + u[1][1] * x1;
                }
            }
            (None, Some(target)) => {
                if target == a {
                    return Err(Error::SpecInvalid("CNOT control equals target".into()));
                }
                let (cm, tm) = (1usize << a, 1usize << target);
                for k in (0..self.amps.len()).filter(|k| k & cm != 0 && k & tm == 0) {
                    self.amps.swap(k, k | tm);
                }
            }
            (None, None) => unreachable!("two-qubit gate without target"),
        }
        Ok(())
    }

    /// `⟨X⟩` on `qubit`.
    pub fn expectation_x(&self, qubit: usize) -> f64 {
        let mask = 1usize << qubit;
        (0..self.amps.len())
            .filter(|k| k & mask == 0)
            .map(|k| 2.0 * (self.amps[k].conj() * self.amps[k | mask]).re)
            .sum()
    }
}

/// Applies `gate` to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut next = state.clone();
    next.apply(gate)?;
    Ok(next)
}

/// Runs the circuit and returns the final state.
pub fn prepare(spec: &QuantumLayerSpec, x: &[f64], theta: &[f64]) -> Result<StateVector> {
    let gates = spec.circuit(x, theta)?;
    let mut state = StateVector::zero(spec.qubits)?;
    for g in &gates {
        state.apply(g)?;
    }
    Ok(state)
}

/// `(⟨X_1⟩, …, ⟨X_n⟩)` after the circuit.
pub fn forward(spec: &QuantumLayerSpec, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let state = prepare(spec, x, theta)?;
    Ok((0..spec.qubits).map(|q| state.expectation_x(q)).collect())
}

/// Jacobians of the layer outputs, row-major with one row per output qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jacobians {
    /// `n × (n·q)`: `∂⟨X_i⟩/∂θ_p`.
    pub wrt_params: Vec<f64>,
    /// `n × n`: `∂⟨X_i⟩/∂x_j`.
    pub wrt_inputs: Vec<f64>,
}

/// Parameter-shift derivatives: every angle (variational or encoding) enters
/// through exactly one rotation, so `(f(·+π/2) − f(·−π/2)) / 2` is exact.
pub fn gradient(spec: &QuantumLayerSpec, x: &[f64], theta: &[f64]) -> Result<Jacobians> {
    spec.circuit(x, theta)?;
    let n = spec.qubits;
    let p = spec.num_params();
    let mut wrt_params = vec![0.0; n * p];
    let mut wrt_inputs = vec![0.0; n * n];
    let mut shifted = theta.to_vec();
    for k in 0..p {
        shifted[k] = theta[k] + FRAC_PI_2;
        let plus = forward(spec, x, &shifted)?;
        shifted[k] = theta[k] - FRAC_PI_2;
        let minus = forward(spec, x, &shifted)?;
        shifted[k] = theta[k];
        for i in 0..n {
            wrt_params[i * p + k] = (plus[i] - minus[i]) / 2.0;
        }
    }
    let mut xs = x.to_vec();
    for j in 0..n {
        xs[j] = x[j] + FRAC_PI_2;
        let plus = forward(spec, &xs, theta)?;
        xs[j] = x[j] - FRAC_PI_2;
        let minus = forward(spec, &xs, theta)?;
        xs[j] = x[j];
        for i in 0..n {
            wrt_inputs[i * n + j] = (plus[i] - minus[i]) / 2.0;
        }
    }
    Ok(Jacobians {
        wrt_params,
        wrt_inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(&StateVector::zero(1).unwrap(), &Gate::H(0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes()[0], h, 0.0) && close(s.amplitudes()[1], h, 0.0));
    }

    #[test]
    fn ry_pi_flips() {
        let s = apply_gate(&StateVector::zero(1).unwrap(), &Gate::RY(0, PI)).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-12);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnot_builds_bell_state() {
        // (|00⟩ + |10⟩)/√2 with the first label being qubit 0: indices 0 and 1.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        let s = StateVector::from_amplitudes(vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0), z, z]).unwrap();
        let out = apply_gate(&s, &Gate::Cnot { control: 0, target: 1 }).unwrap();
        assert!(close(out.amplitudes()[0], h, 0.0));
        assert!(close(out.amplitudes()[3], h, 0.0));
        assert!(out.amplitudes()[1].norm() < 1e-12 && out.amplitudes()[2].norm() < 1e-12);
    }

    #[test]
    fn wire_errors() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply(&Gate::H(2)), Err(Error::WireOutOfRange { wire: 2, qubits: 2 })));
        assert!(s.apply(&Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(s.apply(&Gate::Cnot { control: 0, target: 5 }).is_err());
    }

    #[test]
    fn stabilizer_cases() {
        let spec = QuantumLayerSpec::new(1, 1).unwrap();
        assert!((forward(&spec, &[0.0], &[0.0]).unwrap()[0] - 1.0).abs() < 1e-12);
        let spec = QuantumLayerSpec::new(2, 1).unwrap();
        let out = forward(&spec, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rx_on_plus_has_zero_gradient() {
        let spec = QuantumLayerSpec::new(1, 1).unwrap();
        let j = gradient(&spec, &[0.0], &[0.0]).unwrap();
        assert!(j.wrt_params[0].abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let spec = QuantumLayerSpec::new(3, 2).unwrap();
        assert!(matches!(forward(&spec, &[0.0; 2], &[0.0; 6]), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(forward(&spec, &[0.0; 3], &[0.0; 5]), Err(Error::ShapeMismatch { .. })));
        assert!(QuantumLayerSpec::new(0, 1).is_err());
        assert!(QuantumLayerSpec::new(17, 1).is_err());
        assert!(QuantumLayerSpec::new(4, 0).is_err());
    }

    #[test]
    fn thirteen_qubit_parameter_count() {
        assert_eq!(QuantumLayerSpec::new(13, 4).unwrap().num_params(), 52);
    }

    #[test]
    fn schedule_cycles_axes() {
        let spec = QuantumLayerSpec::new(2, 4).unwrap();
        let axes: Vec<_> = (0..4).map(|l| spec.layer_axis(l)).collect();
        assert_eq!(axes, vec![RotationAxis::X, RotationAxis::Y, RotationAxis::Z, RotationAxis::X]);
        let bad = QuantumLayerSpec {
            qubits: 2,
            depth: 2,
            schedule: AxisSchedule::PerLayer(vec![RotationAxis::Z]),
        };
        assert!(bad.validate().is_err());
    }
}
