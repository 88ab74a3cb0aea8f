//! Maximal-volume row selection in tall matrices.
//!
//! Given an `rows × cols` matrix `M`, [`maxvol`] looks for `cols` rows whose
//! square submatrix has (close to) the largest `|det|`. The search starts
//! from the rows picked by Gaussian elimination with partial pivoting and
//! then repeatedly swaps in the row holding the largest entry of the
//! coefficient matrix `B = M · M_sel⁻¹` until every `|B_ij| ≤ 1 + tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{transpose, Lu};

pub const DEFAULT_TOL: f64 = 0.01;
pub const DEFAULT_MAX_ITERS: usize = 100;
/// Diagonal shift applied to a singular selected submatrix, relative to its
/// largest entry.
pub const RIDGE: f64 = 1e-12;

/// A dense row-major block of objective scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    row_labels: Vec<Vec<usize>>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, row_labels: Vec<Vec<usize>>) -> Result<Self> {
        if cols == 0 || rows < cols {
            return Err(Error::InvalidMatrix(format!(
                "need rows >= cols >= 1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if row_labels.len() != rows {
            return Err(Error::InvalidMatrix(format!(
                "expected {rows} row labels, got {}",
                row_labels.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {v}")));
        }
        Ok(Self {
            rows,
            cols,
            data,
            row_labels,
        })
    }

    /// Builds a matrix from nested rows; row `i` is labelled `[i]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        let labels = (0..rows.len()).map(|i| vec![i]).collect();
        Self::new(rows.len(), cols, data, labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row_labels(&self) -> &[Vec<usize>] {
        &self.row_labels
    }

    fn submatrix(&self, picked: &[usize]) -> Vec<f64> {
        picked.iter().flat_map(|&i| self.row(i).iter().copied()).collect()
    }

    fn check_selection(&self, picked: &[usize]) -> Result<()> {
        if picked.len() != self.cols {
            return Err(Error::InvalidMatrix(format!(
                "selection has {} rows, need {}",
                picked.len(),
                self.cols
            )));
        }
        for (k, &i) in picked.iter().enumerate() {
            if i >= self.rows || picked[..k].contains(&i) {
                return Err(Error::InvalidMatrix(format!("invalid selected row {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSelection {
    /// Selected rows; `picked[j]` is the row occupying slot `j`.
    pub picked: Vec<usize>,
    pub volume: f64,
    /// Whether the dominance certificate `max |B_ij| ≤ 1 + tol` holds.
    pub certified: bool,
    pub swaps: usize,
}

impl RowSelection {
    pub fn sorted_rows(&self) -> Vec<usize> {
        let mut rows = self.picked.clone();
        rows.sort_unstable();
        rows
    }
}

/// `|det|` of the square submatrix formed by `rows`. Singular selections give 0.
pub fn volume(m: &ScoreMatrix, rows: &[usize]) -> Result<f64> {
    m.check_selection(rows)?;
    Ok(Lu::factor(&m.submatrix(rows), m.cols).det().abs())
}

/// The coefficient matrix `B = M · M_sel⁻¹` (row-major, `rows × cols`).
///
/// A singular `M_sel` is shifted by `RIDGE · max(1, max|M_sel|)` on the
/// diagonal before inversion.
pub fn coefficients(m: &ScoreMatrix, picked: &[usize]) -> Result<Vec<f64>> {
    m.check_selection(picked)?;
    let r = m.cols;
    let sel = m.submatrix(picked);
    // B · S = M  <=>  Sᵀ · Bᵀ = Mᵀ, solved one row of B at a time.
    let mut st = transpose(&sel, r, r);
    let mut lu = Lu::factor(&st, r);
    if lu.is_singular() {
        let scale = sel.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        for k in 0..r {
            st[k * r + k] += RIDGE * scale;
        }
        lu = Lu::factor(&st, r);
        if lu.is_singular() {
            return Err(Error::RankDeficient);
        }
    }
    let mut b = m.data.clone();
    for row in b.chunks_mut(r) {
        lu.solve_in_place(row);
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient);
    }
    Ok(b)
}

/// Rows chosen by Gaussian elimination with partial pivoting, one per column.
fn initial_rows(m: &ScoreMatrix) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut work = m.data.clone();
    let mut taken = vec![false; rows];
    let mut picked = Vec::with_capacity(cols);
    for k in 0..cols {
        let mut p = None;
        let mut best = 0.0;
        for i in (0..rows).filter(|&i| !taken[i]) {
            let v = work[i * cols + k].abs();
            if p.is_none() || v > best {
                best = v;
                p = Some(i);
            }
        }
        let p = p.expect("rows >= cols");
        taken[p] = true;
        picked.push(p);
        if best == 0.0 {
            continue;
        }
        let pivot = work[p * cols + k];
        for i in (0..rows).filter(|&i| !taken[i]) {
            let f = work[i * cols + k] / pivot;
            if f != 0.0 {
                for j in k..cols {
                    work[i * cols + j] -= f * work[p * cols + j];
                }
            }
        }
    }
    picked
}

/// Position and magnitude of the largest `|B_ij|` over unselected rows,
/// lowest row then column on ties.
fn largest_coefficient(b: &[f64], cols: usize, picked: &[usize]) -> (usize, usize, f64) {
    let mut at = (0, 0, f64::NEG_INFINITY);
    for (idx, v) in b.iter().enumerate() {
        let v = v.abs();
        if v > at.2 && !picked.contains(&(idx / cols)) {
            at = (idx / cols, idx % cols, v);
        }
    }
    at
}

/// Selects `m.cols()` rows of approximately maximal volume.
///
/// Returns a non-certified selection (instead of an error) when `max_iters`
/// swaps did not reach the dominance certificate.
pub fn maxvol(m: &ScoreMatrix, tol: f64, max_iters: usize) -> Result<RowSelection> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("maxvol tolerance {tol} must be >= 0")));
    }
    let mut picked = initial_rows(m);
    let mut swaps = 0;
    let certified = loop {
        let b = coefficients(m, &picked)?;
        let (i, j, largest) = largest_coefficient(&b, m.cols, &picked);
        if largest <= 1.0 + tol {
            break true;
        }
        if swaps == max_iters {
            break false;
        }
        picked[j] = i;
        swaps += 1;
    };
    let volume = volume(m, &picked)?;
    Ok(RowSelection {
        picked,
        volume,
        certified,
        swaps,
    })
}
