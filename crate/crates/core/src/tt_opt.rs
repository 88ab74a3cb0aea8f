//! Tensor-train cross-approximation search over a discretized grid.
//!
//! The optimizer walks the chain of axes ("cores") left to right. At core
//! `k` it evaluates every value of axis `k` against the `r` fixed prefixes
//! chosen at core `k - 1` (rows) and the `r` fixed suffixes over the axes
//! after `k` (columns), then keeps the `r` rows of maximal volume as the
//! prefixes for core `k + 1`. The last axis is never scanned directly on the
//! way right; after core `d - 2` the axis order is reversed and the selected
//! prefixes become the suffixes of the mirrored pass. A right pass plus a left
//! pass form one sweep.
//!
//! Scores are maximized. Every evaluated entry competes for the best record,
//! not only the rows MaxVol keeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, HistoryPolicy, Objective, TrialReport};
use crate::maxvol::{self, RowSelection, ScoreMatrix};
use crate::search_space::{GridPoint, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtConfig {
    pub rank: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub eval_budget: Option<usize>,
    pub maxvol_tol: f64,
    pub maxvol_max_iters: usize,
    pub history: HistoryPolicy,
}

impl Default for TtConfig {
    fn default() -> Self {
        Self {
            rank: 2,
            sweeps: 1,
            seed: 0,
            eval_budget: None,
            maxvol_tol: maxvol::DEFAULT_TOL,
            maxvol_max_iters: maxvol::DEFAULT_MAX_ITERS,
            history: HistoryPolicy::All,
        }
    }
}

impl TtConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.rank == 0 {
            return bad("rank must be >= 1".into());
        }
        if self.sweeps == 0 {
            return bad("sweeps must be >= 1".into());
        }
        if let Some(b) = self.eval_budget {
            if b < self.rank {
                return bad(format!("eval_budget {b} must be >= rank {}", self.rank));
            }
        }
        if !(self.maxvol_tol >= 0.0) {
            return bad(format!("maxvol_tol {} must be >= 0", self.maxvol_tol));
        }
        Ok(())
    }
}

/// Upper bound on requested grid points: `sweeps · 2 · (n·r + (d−2)·n·r²)`
/// with `n` the largest axis size. For `d = 1` the single axis is scanned once.
pub fn request_bound(space: &SearchSpace, cfg: &TtConfig) -> usize {
    let d = space.dim();
    let n = space.max_points();
    if d == 1 {
        return n;
    }
    let r = cfg.rank;
    cfg.sweeps * 2 * (n * r + (d - 2) * n * r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    fn flipped(self) -> Self {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }
}

/// Sweep state. Index tuples are expressed in the current axis frame:
/// position `p` of the frame holds original axis `frame[p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtState {
    /// 0-based position of the core being evaluated.
    pub core: usize,
    pub direction: Direction,
    pub sweep_index: usize,
    pub half_sweep_index: usize,
    pub frame: Vec<usize>,
    /// `r` prefixes over positions `0..core` (a single empty prefix at core 0).
    pub left_sets: Vec<Vec<usize>>,
    /// `r` tuples over positions `1..d`; the right set at core `k` is each
    /// tuple's tail over positions `k+1..d`.
    pub suffixes: Vec<Vec<usize>>,
    pub best: Option<(GridPoint, f64)>,
}

impl TtState {
    pub fn rank(&self) -> usize {
        self.suffixes.len()
    }

    pub fn right_sets(&self) -> Vec<&[usize]> {
        self.suffixes.iter().map(|s| &s[self.core..]).collect()
    }

    /// Maps a full tuple in the current frame to original axis order.
    pub fn to_original(&self, tuple: &[usize]) -> Vec<usize> {
        let mut out = vec![0; tuple.len()];
        for (p, &i) in tuple.iter().enumerate() {
            out[self.frame[p]] = i;
        }
        out
    }
}

/// Reverses the axis order at the end of a half-sweep.
///
/// The fixed prefixes become the suffixes of the mirrored pass, the core
/// restarts at 0 and the best record is carried over unchanged.
pub fn reverse_axes(state: &TtState, space: &SearchSpace) -> (TtState, SearchSpace) {
    let suffixes = state
        .left_sets
        .iter()
        .map(|prefix| prefix.iter().rev().copied().collect())
        .collect();
    let next = TtState {
        core: 0,
        direction: state.direction.flipped(),
        sweep_index: state.sweep_index,
        half_sweep_index: state.half_sweep_index,
        frame: state.frame.iter().rev().copied().collect(),
        left_sets: vec![Vec::new()],
        suffixes,
        best: state.best.clone(),
    };
    (next, space.reversed())
}

/// One core's score block. Rows are `(prefix, value of the core axis)` with
/// the prefix varying slowest; columns are the right sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreBlock {
    /// Row labels in the current frame (`prefix ++ [i]`).
    pub labels: Vec<Vec<usize>>,
    pub cols: usize,
    /// Row-major scores; `None` where the budget prevented evaluation.
    pub scores: Vec<Option<f64>>,
}

impl CoreBlock {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_complete(&self) -> bool {
        self.scores.iter().all(Option::is_some)
    }

    /// Rows whose every entry was evaluated.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.rows())
            .filter(|&i| self.scores[i * self.cols..(i + 1) * self.cols].iter().all(Option::is_some))
            .collect()
    }

    /// The score matrix restricted to complete rows.
    pub fn matrix(&self) -> Result<ScoreMatrix> {
        let rows = self.complete_rows();
        let data = rows
            .iter()
            .flat_map(|&i| self.scores[i * self.cols..(i + 1) * self.cols].iter().map(|v| v.expect("complete row")))
            .collect();
        let labels = rows.iter().map(|&i| self.labels[i].clone()).collect();
        ScoreMatrix::new(rows.len(), self.cols, data, labels)
    }
}

/// The block shifted by its minimum so that every entry is nonnegative and
/// the best score has the largest modulus.
pub fn shifted_nonnegative(matrix: &ScoreMatrix) -> Result<ScoreMatrix> {
    let min = matrix.data().iter().copied().fold(f64::INFINITY, f64::min);
    ScoreMatrix::new(
        matrix.rows(),
        matrix.cols(),
        matrix.data().iter().map(|v| v - min).collect(),
        matrix.row_labels().to_vec(),
    )
}

/// A running tensor-train search. [`tt_optimize`] drives it to completion;
/// the step methods are public for inspection and testing.
pub struct TtSearch<'a, O: Objective + ?Sized> {
    cfg: TtConfig,
    frame_space: SearchSpace,
    state: TtState,
    eval: Evaluator<'a, O>,
}

impl<'a, O: Objective + ?Sized> TtSearch<'a, O> {
    pub fn new(objective: &'a O, space: &'a SearchSpace, cfg: &TtConfig) -> Result<Self> {
        cfg.validate()?;
        let d = space.dim();
        let r = cfg.rank;
        if r > space.min_points() {
            return Err(Error::RankExceedsAxis {
                rank: r,
                points: space.min_points(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut suffixes: Vec<Vec<usize>> = Vec::with_capacity(r);
        while suffixes.len() < r && d > 1 {
            let tuple: Vec<usize> = (1..d).map(|p| rng.random_range(0..space.points(p))).collect();
            if !suffixes.contains(&tuple) {
                suffixes.push(tuple);
            }
        }
        if d == 1 {
            suffixes = vec![Vec::new(); r];
        }
        let state = TtState {
            core: 0,
            direction: Direction::Right,
            sweep_index: 0,
            half_sweep_index: 0,
            frame: (0..d).collect(),
            left_sets: vec![Vec::new()],
            suffixes,
            best: None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            frame_space: space.clone(),
            state,
            eval: Evaluator::new(objective, space, cfg.eval_budget, true, cfg.history),
        })
    }

    pub fn state(&self) -> &TtState {
        &self.state
    }

    /// The search space in the current axis frame.
    pub fn frame_space(&self) -> &SearchSpace {
        &self.frame_space
    }

    pub fn distinct_evals(&self) -> usize {
        self.eval.counts().0
    }

    pub fn total_requests(&self) -> usize {
        self.eval.counts().1
    }

    /// Evaluates the block for the current core through the cache.
    pub fn evaluate_core_block(&mut self) -> Result<CoreBlock> {
        let core = self.state.core;
        let n = self.frame_space.points(core);
        let mut labels = Vec::with_capacity(self.state.left_sets.len() * n);
        for prefix in &self.state.left_sets {
            for i in 0..n {
                let mut label = prefix.clone();
                label.push(i);
                labels.push(label);
            }
        }
        let right = self.state.right_sets();
        let mut requests = Vec::with_capacity(labels.len() * right.len());
        for label in &labels {
            for suffix in &right {
                let mut tuple = label.clone();
                tuple.extend_from_slice(suffix);
                requests.push(self.state.to_original(&tuple));
            }
        }
        let cols = right.len();
        let scores = self.eval.request_block(&requests)?;
        self.state.best = self.eval.best().map(|(s, p)| (p.clone(), *s));
        Ok(CoreBlock {
            labels,
            cols,
            scores,
        })
    }

    fn select(&self, matrix: &ScoreMatrix) -> Result<RowSelection> {
        let matrix = &shifted_nonnegative(matrix)?;
        match maxvol::maxvol(matrix, self.cfg.maxvol_tol, self.cfg.maxvol_max_iters) {
            Err(Error::RankDeficient) => {
                let picked: Vec<usize> = (0..matrix.cols()).collect();
                let volume = maxvol::volume(matrix, &picked)?;
                Ok(RowSelection {
                    picked,
                    volume,
                    certified: false,
                    swaps: 0,
                })
            }
            other => other,
        }
    }

    /// Fixes the rows picked by MaxVol as the prefixes of the next core.
    pub fn fix_rows(&mut self, matrix: &ScoreMatrix, selection: &RowSelection) {
        self.state.left_sets = selection
            .sorted_rows()
            .into_iter()
            .map(|i| matrix.row_labels()[i].clone())
            .collect();
        self.state.core += 1;
    }

    /// Reverses the frame after the last core of a half-sweep.
    pub fn reverse(&mut self) {
        let (state, space) = reverse_axes(&self.state, &self.frame_space);
        self.state = state;
        self.frame_space = space;
        self.state.half_sweep_index += 1;
        if self.state.half_sweep_index == 2 {
            self.state.half_sweep_index = 0;
            self.state.sweep_index += 1;
        }
    }

    /// Runs one half-sweep; returns `false` when the budget stopped the run.
    pub fn half_sweep(&mut self) -> Result<bool> {
        let d = self.frame_space.dim();
        while self.state.core + 1 < d {
            let block = self.evaluate_core_block()?;
            if !block.is_complete() {
                return Ok(false);
            }
            let matrix = block.matrix()?;
            let selection = self.select(&matrix)?;
            self.fix_rows(&matrix, &selection);
        }
        self.reverse();
        Ok(true)
    }

    pub fn finish(self) -> Result<TrialReport> {
        self.eval.into_report()
    }
}

/// Maximizes `objective` over `space` with tensor-train cross-approximation.
pub fn tt_optimize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    cfg: &TtConfig,
) -> Result<TrialReport> {
    let mut search = TtSearch::new(objective, space, cfg)?;
    if space.dim() == 1 {
        search.evaluate_core_block()?;
        return search.finish();
    }
    'sweeps: for _ in 0..cfg.sweeps {
        for _ in 0..2 {
            if !search.half_sweep()? {
                break 'sweeps;
            }
        }
    }
    search.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search_space::AxisSpec;

    fn cube(d: usize, n: usize) -> SearchSpace {
        SearchSpace::uniform(d, 0.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_objective() {
        let space = cube(2, 3);
        let cfg = TtConfig {
            rank: 1,
            ..TtConfig::default()
        };
        let report = tt_optimize(&|_: &GridPoint| 5.0, &space, &cfg).unwrap();
        assert_eq!(report.best_score, 5.0);
        assert!(report.history.iter().all(|h| h.score == 5.0));
    }

    #[test]
    fn first_block_shapes_and_cache() {
        let space = cube(3, 4);
        let f = |p: &GridPoint| p.values.iter().sum::<f64>();
        let mut search = TtSearch::new(&f, &space, &TtConfig::default()).unwrap();
        let block = search.evaluate_core_block().unwrap();
        assert_eq!((block.rows(), block.cols), (4, 2));
        assert_eq!(search.total_requests(), 8);
        assert_eq!(search.distinct_evals(), 8);
        // Same state again: all hits.
        search.evaluate_core_block().unwrap();
        assert_eq!(search.distinct_evals(), 8);
        assert_eq!(search.total_requests(), 16);

        let m = block.matrix().unwrap();
        let sel = maxvol::maxvol(&m, 0.01, 100).unwrap();
        search.fix_rows(&m, &sel);
        let inner = search.evaluate_core_block().unwrap();
        assert_eq!((inner.rows(), inner.cols), (8, 2));
        assert_eq!(search.total_requests(), 32);
    }

    #[test]
    fn reverse_is_an_involution_preserving_values() {
        let space = SearchSpace::new(vec![
            AxisSpec::continuous("a", 0.0, 1.0, 3),
            AxisSpec::continuous("b", 5.0, 9.0, 4),
            AxisSpec::integer("c", 1.0, 5.0, 5),
        ])
        .unwrap();
        let state = TtState {
            core: 2,
            direction: Direction::Right,
            sweep_index: 0,
            half_sweep_index: 0,
            frame: vec![0, 1, 2],
            left_sets: vec![vec![0, 1], vec![2, 3]],
            suffixes: vec![vec![1, 4], vec![2, 0]],
            best: Some((space.point(&[2, 3, 4]).unwrap(), 7.5)),
        };
        let (rev, rev_space) = reverse_axes(&state, &space);
        assert_eq!(rev.core, 0);
        assert_eq!(rev.frame, vec![2, 1, 0]);
        assert_eq!(rev.suffixes, vec![vec![1, 0], vec![3, 2]]);
        assert_eq!(rev.best, state.best);
        // (i, j, k) in the original frame is (k, j, i) in the reversed one.
        let tuple = [4, 3, 2];
        let orig = rev.to_original(&tuple);
        assert_eq!(orig, vec![2, 3, 4]);
        assert_eq!(
            rev_space.point(&tuple).unwrap().values.iter().rev().copied().collect::<Vec<_>>(),
            space.point(&orig).unwrap().values
        );
        let (back, back_space) = reverse_axes(&rev, &rev_space);
        assert_eq!(back.frame, state.frame);
        assert_eq!(back_space, space);
    }

    #[test]
    fn single_axis_is_a_scan() {
        let space = cube(1, 5);
        let report = tt_optimize(&|p: &GridPoint| -(p.values[0] - 0.5).abs(), &space, &TtConfig::default()).unwrap();
        assert_eq!(report.best_point.indices, vec![2]);
        assert_eq!(report.distinct_evals, 5);
    }

    #[test]
    fn errors() {
        let space = cube(3, 2);
        let cfg = TtConfig {
            rank: 3,
            ..TtConfig::default()
        };
        assert!(matches!(
            tt_optimize(&|_: &GridPoint| 0.0, &space, &cfg),
            Err(Error::RankExceedsAxis { rank: 3, points: 2 })
        ));
        let nan = |p: &GridPoint| if p.indices == vec![1, 1, 1] { f64::NAN } else { 1.0 };
        let space = cube(3, 4);
        let cfg = TtConfig {
            rank: 2,
            sweeps: 3,
            seed: 1,
            ..TtConfig::default()
        };
        // Whether the NaN point is reached depends on the path; a failure must name it.
        if let Err(e) = tt_optimize(&nan, &space, &cfg) {
            match e {
                Error::ObjectiveFailure { point, .. } => assert_eq!(point.indices, vec![1, 1, 1]),
                other => panic!("unexpected {other}"),
            }
        }
        let everywhere_nan = |_: &GridPoint| f64::NAN;
        assert!(matches!(
            tt_optimize(&everywhere_nan, &space, &cfg),
            Err(Error::ObjectiveFailure { .. })
        ));
        let bad = TtConfig {
            eval_budget: Some(1),
            ..TtConfig::default()
        };
        assert!(tt_optimize(&|_: &GridPoint| 0.0, &space, &bad).is_err());
    }

    #[test]
    fn budget_stops_gracefully() {
        let space = cube(4, 4);
        let f = |p: &GridPoint| p.values.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let cfg = TtConfig {
            eval_budget: Some(13),
            sweeps: 4,
            ..TtConfig::default()
        };
        let report = tt_optimize(&f, &space, &cfg).unwrap();
        assert_eq!(report.distinct_evals, 13);
        assert!(report.budget_exhausted);
        let max = report.history.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.best_score, max);
    }
}
