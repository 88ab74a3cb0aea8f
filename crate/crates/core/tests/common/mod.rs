//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use tensorhpo_core::quantum::{Gate, QuantumLayerSpec};

/// Central difference of a scalar function along each coordinate.
pub fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    (0..x.len())
        .map(|i| {
            xs[i] = x[i] + h;
            let plus = f(&xs);
            xs[i] = x[i] - h;
            let minus = f(&xs);
            xs[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor so near-zero entries compare sanely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub type Dense = Vec<Vec<Complex64>>;

fn identity(dim: usize) -> Dense {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (na, nb) = (a.len(), b.len());
    (0..na * nb)
        .map(|i| (0..na * nb).map(|j| a[i / nb][j / nb] * b[i % nb][j % nb]).collect())
        .collect()
}

/// Full `2^n × 2^n` unitary of a gate with qubit 0 as the least significant bit.
pub fn gate_unitary(gate: &Gate, qubits: usize) -> Dense {
    let dim = 1 << qubits;
    if let Gate::Cnot { control, target } = *gate {
        let mut u = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for b in 0..dim {
            let out = if b >> control & 1 == 1 { b ^ (1 << target) } else { b };
            u[out][b] = Complex64::new(1.0, 0.0);
        }
        return u;
    }
    let wire = match *gate {
        Gate::H(q) | Gate::RX(q, _) | Gate::RY(q, _) | Gate::RZ(q, _) => q,
        Gate::Cnot { .. } => unreachable!(),
    };
    let m = gate.matrix().expect("single-qubit gate");
    let small: Dense = m.iter().map(|r| r.to_vec()).collect();
    let mut u = identity(1);
    for q in (0..qubits).rev() {
        u = kron(&u, &if q == wire { small.clone() } else { identity(2) });
    }
    u
}

/// Circuit unitary as the product of dense gate matrices.
pub fn circuit_unitary(spec: &QuantumLayerSpec, x: &[f64], theta: &[f64]) -> Dense {
    let mut u = identity(1 << spec.qubits);
    for g in spec.circuit(x, theta).unwrap() {
        u = matmul(&gate_unitary(&g, spec.qubits), &u);
    }
    u
}

/// `⟨X_i⟩` for every qubit computed from the dense unitary applied to |0…0⟩.
pub fn dense_forward(spec: &QuantumLayerSpec, x: &[f64], theta: &[f64]) -> Vec<f64> {
    let u = circuit_unitary(spec, x, theta);
    let psi: Vec<Complex64> = u.iter().map(|row| row[0]).collect();
    (0..spec.qubits)
        .map(|q| {
            let xq = gate_unitary_x(q, spec.qubits);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..psi.len() {
                for j in 0..psi.len() {
                    acc += psi[i].conj() * xq[i][j] * psi[j];
                }
            }
            acc.re
        })
        .collect()
}

fn gate_unitary_x(wire: usize, qubits: usize) -> Dense {
    let x: Dense = vec![
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    ];
    let mut u = identity(1);
    for q in (0..qubits).rev() {
        u = kron(&u, &if q == wire { x.clone() } else { identity(2) });
    }
    u
}

/// Row indices of the maximum-volume `cols`-subset, by exhaustive search.
pub fn brute_force_maxvol(m: &[f64], rows: usize, cols: usize) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), -1.0);
    let mut pick: Vec<usize> = (0..cols).collect();
    loop {
        let sub: Vec<f64> = pick.iter().flat_map(|&r| m[r * cols..(r + 1) * cols].to_vec()).collect();
        let v = det(&sub, cols).abs();
        if v > best.1 {
            best = (pick.clone(), v);
        }
        let mut i = cols;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < rows - cols + i {
                pick[i] += 1;
                for j in i + 1..cols {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Determinant by cofactor expansion.
pub fn det(a: &[f64], n: usize) -> f64 {
    if n == 1 {
        return a[0];
    }
    (0..n)
        .map(|c| {
            let minor: Vec<f64> = (1..n)
                .flat_map(|r| (0..n).filter(move |&k| k != c).map(move |k| (r, k)))
                .map(|(r, k)| a[r * n + k])
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[c] * det(&minor, n - 1)
        })
        .sum()
}

/// Every grid tuple in lexicographic order (last axis fastest).
pub fn enumerate(points: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in points {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}
