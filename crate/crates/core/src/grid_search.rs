//! Exhaustive grid search in lexicographic index order (last axis fastest).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, HistoryPolicy, Objective, TrialReport};
use crate::search_space::{GridPoint, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traversal {
    #[default]
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsConfig {
    pub eval_budget: Option<usize>,
    pub traversal: Traversal,
    /// Unused by the search; kept so reports carry the same fields as TT runs.
    pub seed: u64,
    pub history: HistoryPolicy,
}

impl GsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_budget == Some(0) {
            return Err(Error::InvalidConfig("eval_budget must be >= 1".into()));
        }
        Ok(())
    }
}

/// Advances `indices` to the next tuple in lexicographic order; returns
/// `false` after the last one.
fn advance(indices: &mut [usize], space: &SearchSpace) -> bool {
    for axis in (0..indices.len()).rev() {
        indices[axis] += 1;
        if indices[axis] < space.points(axis) {
            return true;
        }
        indices[axis] = 0;
    }
    false
}

/// Evaluates the grid in lexicographic order until exhausted or the budget
/// is spent. Ties keep the lexicographically first point.
pub fn grid_optimize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    cfg: &GsConfig,
) -> Result<TrialReport> {
    cfg.validate()?;
    let mut eval = Evaluator::new(objective, space, cfg.eval_budget, false, cfg.history);
    let mut indices = vec![0; space.dim()];
    let mut point = GridPoint::empty();
    loop {
        space.fill_point(&indices, &mut point);
        if eval.evaluate_fresh(&point)?.is_none() {
            break;
        }
        if !advance(&mut indices, space) {
            break;
        }
    }
    eval.into_report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search_space::AxisSpec;

    #[test]
    fn line_scan() {
        let space = SearchSpace::new(vec![AxisSpec::continuous("x", 0.0, 2.0, 3)]).unwrap();
        let r = grid_optimize(&|p: &GridPoint| p.values[0], &space, &GsConfig::default()).unwrap();
        assert_eq!(r.best_point.indices, vec![2]);
        assert_eq!(r.distinct_evals, 3);
        assert_eq!(r.total_requests, 3);
        assert!(!r.budget_exhausted);
    }

    #[test]
    fn lexicographic_order_and_ties() {
        let space = SearchSpace::uniform(2, 0.0, 1.0, 3).unwrap();
        let r = grid_optimize(&|_: &GridPoint| 1.0, &space, &GsConfig::default()).unwrap();
        assert_eq!(r.best_point.indices, vec![0, 0]);
        let order: Vec<Vec<usize>> = r.history.iter().map(|h| h.point.indices.clone()).collect();
        assert_eq!(order[1], vec![0, 1]);
        assert_eq!(order[3], vec![1, 0]);
        assert_eq!(order.len(), 9);
    }

    #[test]
    fn budget_caps_evaluations() {
        let space = SearchSpace::uniform(3, 0.0, 1.0, 4).unwrap();
        let cfg = GsConfig {
            eval_budget: Some(10),
            ..GsConfig::default()
        };
        let r = grid_optimize(&|p: &GridPoint| p.values.iter().sum::<f64>(), &space, &cfg).unwrap();
        assert_eq!(r.distinct_evals, 10);
        assert!(r.budget_exhausted);
        let big = GsConfig {
            eval_budget: Some(1000),
            ..GsConfig::default()
        };
        let r = grid_optimize(&|p: &GridPoint| p.values.iter().sum::<f64>(), &space, &big).unwrap();
        assert_eq!(r.distinct_evals, 64);
        assert!(!r.budget_exhausted);
        assert!(grid_optimize(&|_: &GridPoint| 0.0, &space, &GsConfig { eval_budget: Some(0), ..GsConfig::default() }).is_err());
    }

    #[test]
    fn improvements_history() {
        let space = SearchSpace::uniform(2, 0.0, 1.0, 4).unwrap();
        let cfg = GsConfig {
            history: HistoryPolicy::Improvements,
            ..GsConfig::default()
        };
        let r = grid_optimize(&|p: &GridPoint| p.values[1] - p.values[0], &space, &cfg).unwrap();
        assert!(r.history.windows(2).all(|w| w[0].score < w[1].score));
        assert_eq!(r.history.last().unwrap().score, r.best_score);
        assert_eq!(r.distinct_evals, 16);
    }

    #[test]
    fn objective_failure_names_point() {
        let space = SearchSpace::uniform(2, 0.0, 1.0, 2).unwrap();
        let f = |p: &GridPoint| if p.indices == vec![1, 0] { f64::INFINITY } else { 0.0 };
        match grid_optimize(&f, &space, &GsConfig::default()) {
            Err(Error::ObjectiveFailure { point, .. }) => assert_eq!(point.indices, vec![1, 0]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
