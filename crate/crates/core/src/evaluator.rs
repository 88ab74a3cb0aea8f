//! Objective evaluation bookkeeping shared by the optimizers: the per-run
//! cache keyed on grid indices, request/evaluation counters, the best-so-far
//! record and the evaluation history.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_space::{GridPoint, SearchSpace};

/// A black-box score to be maximized.
pub trait Objective: Sync {
    fn evaluate(&self, point: &GridPoint) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&GridPoint) -> f64 + Sync,
{
    fn evaluate(&self, point: &GridPoint) -> Result<f64> {
        Ok(self(point))
    }
}

/// Which evaluations are kept in [`TrialReport::history`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryPolicy {
    /// Every fresh evaluation.
    #[default]
    All,
    /// Only evaluations that raise the running maximum.
    Improvements,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// 1-based position among fresh evaluations.
    pub eval_index: usize,
    pub score: f64,
    pub point: GridPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub best_point: GridPoint,
    pub best_score: f64,
    pub distinct_evals: usize,
    pub total_requests: usize,
    pub budget_exhausted: bool,
    pub history: Vec<HistoryEntry>,
}

pub(crate) struct Evaluator<'a, O: Objective + ?Sized> {
    objective: &'a O,
    space: &'a SearchSpace,
    cache: Option<HashMap<Vec<usize>, f64>>,
    budget: Option<usize>,
    policy: HistoryPolicy,
    distinct: usize,
    requests: usize,
    exhausted: bool,
    best: Option<(f64, GridPoint)>,
    history: Vec<HistoryEntry>,
    history_max: f64,
}

impl<'a, O: Objective + ?Sized> Evaluator<'a, O> {
    pub(crate) fn new(
        objective: &'a O,
        space: &'a SearchSpace,
        budget: Option<usize>,
        cached: bool,
        policy: HistoryPolicy,
    ) -> Self {
        Self {
            objective,
            space,
            cache: cached.then(HashMap::new),
            budget,
            policy,
            distinct: 0,
            requests: 0,
            exhausted: false,
            best: None,
            history: Vec::new(),
            history_max: f64::NEG_INFINITY,
        }
    }

    pub(crate) fn counts(&self) -> (usize, usize) {
        (self.distinct, self.requests)
    }

    pub(crate) fn remaining(&self) -> Option<usize> {
        self.budget.map(|b| b.saturating_sub(self.distinct))
    }

    pub(crate) fn best(&self) -> Option<&(f64, GridPoint)> {
        self.best.as_ref()
    }

    fn checked(&self, point: &GridPoint) -> Result<f64> {
        match self.objective.evaluate(point) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(Error::ObjectiveFailure {
                point: point.clone(),
                value: v,
            }),
            Err(Error::ObjectiveFailure { point, value }) => {
                Err(Error::ObjectiveFailure { point, value })
            }
            Err(e) => Err(Error::ObjectiveError {
                point: point.clone(),
                message: e.to_string(),
            }),
        }
    }

    fn record(&mut self, score: f64, point: &GridPoint) {
        self.distinct += 1;
        let keep = match self.policy {
            HistoryPolicy::All => true,
            HistoryPolicy::Improvements => score > self.history_max,
        };
        self.history_max = self.history_max.max(score);
        if keep {
            self.history.push(HistoryEntry {
                eval_index: self.distinct,
                score,
                point: point.clone(),
            });
        }
    }

    fn offer_best(&mut self, score: f64, point: &GridPoint) {
        if self.best.as_ref().is_none_or(|(b, _)| score > *b) {
            self.best = Some((score, point.clone()));
        }
    }

    /// Evaluates a point known to be fresh, bypassing the cache. Returns
    /// `None` once the budget is spent.
    pub(crate) fn evaluate_fresh(&mut self, point: &GridPoint) -> Result<Option<f64>> {
        if self.remaining() == Some(0) {
            self.exhausted = true;
            return Ok(None);
        }
        let score = self.checked(point)?;
        self.requests += 1;
        self.record(score, point);
        self.offer_best(score, point);
        Ok(Some(score))
    }

    /// Serves a block of requests (original axis order) through the cache.
    ///
    /// Fresh points are evaluated concurrently; bookkeeping follows request
    /// order so results do not depend on completion order. Entries are
    /// `None` when the budget ran out before they could be evaluated.
    pub(crate) fn request_block(&mut self, indices: &[Vec<usize>]) -> Result<Vec<Option<f64>>> {
        let cache = self.cache.get_or_insert_with(HashMap::new);
        let mut fresh: Vec<&Vec<usize>> = Vec::new();
        let mut allowed = self.budget.map(|b| b.saturating_sub(self.distinct));
        for idx in indices {
            if cache.contains_key(idx) || fresh.contains(&idx) {
                continue;
            }
            if allowed == Some(0) {
                self.exhausted = true;
                continue;
            }
            fresh.push(idx);
            allowed = allowed.map(|a| a - 1);
        }
        let points = fresh
            .iter()
            .map(|idx| self.space.point(idx))
            .collect::<Result<Vec<_>>>()?;
        let scores: Vec<Result<f64>> = points.par_iter().map(|p| self.checked(p)).collect();
        for (point, score) in points.iter().zip(scores) {
            let score = score?;
            self.record(score, point);
            self.cache
                .as_mut()
                .expect("cache initialised")
                .insert(point.indices.clone(), score);
        }
        let cache = self.cache.as_ref().expect("cache initialised");
        let served: Vec<Option<f64>> = indices.iter().map(|idx| cache.get(idx).copied()).collect();
        for (idx, score) in indices.iter().zip(&served) {
            if let Some(score) = *score {
                self.requests += 1;
                if self.best.as_ref().is_none_or(|(b, _)| score > *b) {
                    let point = self.space.point(idx)?;
                    self.best = Some((score, point));
                }
            }
        }
        Ok(served)
    }

    pub(crate) fn into_report(self) -> Result<TrialReport> {
        let (best_score, best_point) = self.best.ok_or_else(|| {
            Error::InvalidConfig("no objective evaluation was performed".into())
        })?;
        Ok(TrialReport {
            best_point,
            best_score,
            distinct_evals: self.distinct,
            total_requests: self.requests,
            budget_exhausted: self.exhausted,
            history: self.history,
        })
    }
}
