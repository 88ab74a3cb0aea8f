//! Discretized hyperparameter domains.
//!
//! Every axis is an interval `[lower, upper]` sampled at `points` evenly spaced
//! values that include both endpoints. Integer axes round the evenly spaced
//! values and reject grids where rounding collapses two points into one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    #[default]
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    #[serde(default)]
    pub kind: AxisKind,
}

impl AxisSpec {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64, points: usize) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            points,
            kind: AxisKind::Continuous,
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64, points: usize) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            points,
            kind: AxisKind::Integer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidAxis {
            axis: self.name.clone(),
            reason: reason.to_string(),
        };
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        if self.lower >= self.upper {
            return Err(bad("lower must be strictly below upper"));
        }
        if self.points < 2 {
            return Err(bad("at least 2 points are required"));
        }
        if self.kind == AxisKind::Integer
            && (self.lower.fract() != 0.0 || self.upper.fract() != 0.0)
        {
            return Err(bad("integer axes need whole-number bounds"));
        }
        Ok(())
    }

    /// Grid value for `index` without validating the axis.
    fn raw_value(&self, index: usize) -> f64 {
        let value = if index + 1 == self.points {
            self.upper
        } else {
            let step = (self.upper - self.lower) / (self.points - 1) as f64;
            self.lower + index as f64 * step
        };
        match self.kind {
            AxisKind::Continuous => value,
            AxisKind::Integer => value.round(),
        }
    }

    /// All `points` grid values in increasing order.
    pub fn discretize(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let values: Vec<f64> = (0..self.points).map(|j| self.raw_value(j)).collect();
        if let Some(w) = values.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateGridValue {
                axis: self.name.clone(),
                value: w[1],
            });
        }
        Ok(values)
    }

    pub fn value_at(&self, index: usize) -> Result<f64> {
        self.validate()?;
        if index >= self.points {
            return Err(Error::IndexOutOfRange {
                index,
                points: self.points,
            });
        }
        Ok(self.raw_value(index))
    }
}

/// An ordered, validated list of axes with their grids resolved up front.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    axes: Vec<AxisSpec>,
    grids: Vec<Vec<f64>>,
}

impl SearchSpace {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidSpace("at least one axis is required".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate axis name `{}`",
                    a.name
                )));
            }
        }
        let grids = axes
            .iter()
            .map(AxisSpec::discretize)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { axes, grids })
    }

    /// `dim` identical continuous axes named `x1..xd`.
    pub fn uniform(dim: usize, lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(
            (1..=dim)
                .map(|i| AxisSpec::continuous(format!("x{i}"), lower, upper, points))
                .collect(),
        )
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn points(&self, axis: usize) -> usize {
        self.axes[axis].points
    }

    pub fn grid(&self, axis: usize) -> &[f64] {
        &self.grids[axis]
    }

    pub fn min_points(&self) -> usize {
        self.axes.iter().map(|a| a.points).min().unwrap_or(0)
    }

    pub fn max_points(&self) -> usize {
        self.axes.iter().map(|a| a.points).max().unwrap_or(0)
    }

    /// Number of grid points, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.axes
            .iter()
            .try_fold(1u128, |acc, a| acc.checked_mul(a.points as u128))
            .unwrap_or(u128::MAX)
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn point(&self, indices: &[usize]) -> Result<GridPoint> {
        if indices.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                what: "grid point indices",
                expected: self.dim(),
                actual: indices.len(),
            });
        }
        let values = indices
            .iter()
            .enumerate()
            .map(|(axis, &i)| {
                self.grids[axis]
                    .get(i)
                    .copied()
                    .ok_or(Error::IndexOutOfRange {
                        index: i,
                        points: self.axes[axis].points,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridPoint {
            indices: indices.to_vec(),
            values,
        })
    }

    /// Overwrites `point` in place; indices must already be in range.
    pub(crate) fn fill_point(&self, indices: &[usize], point: &mut GridPoint) {
        point.indices.clear();
        point.indices.extend_from_slice(indices);
        point.values.clear();
        point
            .values
            .extend(indices.iter().enumerate().map(|(a, &i)| self.grids[a][i]));
    }

    /// The same axes in reverse order.
    pub fn reversed(&self) -> SearchSpace {
        SearchSpace {
            axes: self.axes.iter().rev().cloned().collect(),
            grids: self.grids.iter().rev().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridPoint {
    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}
