use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method, ObjectiveKind};
use crate::benchmarks::{BenchmarkFn, BenchmarkObjective};
use crate::error::{Error, Result};
use crate::evaluator::{Objective, TrialReport};
use crate::grid_search::{grid_optimize, GsConfig};
use crate::model::{DataSplit, Dataset, ModelObjective, ObjectiveSettings};
use crate::search_space::{GridPoint, SearchSpace};
use crate::tt_opt::{request_bound, tt_optimize, TtConfig};

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 11] = [
    "trial",
    "seed",
    "method",
    "objective",
    "d",
    "n",
    "r",
    "best_fitness",
    "distinct_evals",
    "total_requests",
    "wall_ms",
];

/// Marker in the `trial` column of aggregate rows.
pub const SUMMARY_MARKER: &str = "summary";

/// Cooperative cancellation flag checked between trials.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    /// In the objective's own sign: benchmark values as minimized, model
    /// objectives as test accuracy.
    pub best_fitness: f64,
    pub distinct_evals: usize,
    pub total_requests: usize,
    pub wall_ms: Option<f64>,
    /// Absent when the row was read back from CSV.
    pub best_point: Option<GridPoint>,
    pub budget_exhausted: bool,
}

/// Known values to report deltas against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub fitness: f64,
    pub er: usize,
    pub fitness_delta: f64,
    pub er_delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub mean_best: f64,
    pub min_best: f64,
    pub median_best: f64,
    pub max_best: f64,
    /// Expected runtime: the largest distinct-evaluation count of any trial.
    pub er: usize,
    pub mean_distinct: f64,
    pub max_total_requests: usize,
    /// TT request bound for this space, when the method is TT.
    pub eval_bound: Option<usize>,
    pub bound_respected: Option<bool>,
    pub reference: Option<Reference>,
}

impl Summary {
    pub fn from_rows(rows: &[TrialRow], eval_bound: Option<usize>, reference: Option<(f64, usize)>) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        let mut best: Vec<f64> = rows.iter().map(|r| r.best_fitness).collect();
        let mean_best = best.iter().sum::<f64>() / best.len() as f64;
        best.sort_by(f64::total_cmp);
        let mid = best.len() / 2;
        let median_best = if best.len() % 2 == 1 {
            best[mid]
        } else {
            (best[mid - 1] + best[mid]) / 2.0
        };
        let er = rows.iter().map(|r| r.distinct_evals).max().unwrap_or(0);
        Some(Summary {
            trials: rows.len(),
            mean_best,
            min_best: best[0],
            median_best,
            max_best: best[best.len() - 1],
            er,
            mean_distinct: rows.iter().map(|r| r.distinct_evals as f64).sum::<f64>() / rows.len() as f64,
            max_total_requests: rows.iter().map(|r| r.total_requests).max().unwrap_or(0),
            eval_bound,
            bound_respected: eval_bound.map(|b| rows.iter().all(|r| r.distinct_evals <= b)),
            reference: reference.map(|(fitness, ref_er)| Reference {
                fitness,
                er: ref_er,
                fitness_delta: mean_best - fitness,
                er_delta: er as i64 - ref_er as i64,
            }),
        })
    }
}

/// All trials for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimGroup {
    pub d: usize,
    /// Largest axis size.
    pub n: usize,
    pub r: Option<usize>,
    pub rows: Vec<TrialRow>,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub method: Method,
    pub objective: ObjectiveKind,
    pub base_seed: u64,
    pub groups: Vec<DimGroup>,
    /// Set when the run stopped early; groups hold the finished trials.
    pub cancelled: bool,
}

/// Progress notifications from [`run_suite_with`].
#[derive(Debug, Clone)]
pub enum Progress<'a> {
    GroupStarted { d: usize, n: usize, r: Option<usize> },
    TrialFinished { d: usize, row: &'a TrialRow },
}

/// Reference fitness and ER for benchmark runs with 4 points per axis and,
/// for TT, rank 2.
pub fn reference_values(objective: ObjectiveKind, method: Method, d: usize, n: usize, r: Option<usize>) -> Option<(f64, usize)> {
    use Method::*;
    use ObjectiveKind::*;
    if n != 4 || !matches!(r, None | Some(2)) {
        return None;
    }
    let er = |tt: usize, gs: usize| if method == Tt { tt } else { gs };
    let (er, fit) = match (objective, d) {
        (Schwefel, 3) => (er(32, 64), -541.76),
        (Schwefel, 6) => (er(80, 4092), -1083.53),
        (Schwefel, 10) => (er(144, 10000), -1805.89),
        (FletcherPowell, 3) => (er(32, 64), if method == Tt { 5136.64 } else { 4113.78 }),
        (FletcherPowell, 6) => (er(80, 4092), if method == Tt { 23954.5 } else { 14295.2 }),
        (FletcherPowell, 10) => (er(144, 10000), if method == Tt { 78101.4 } else { 36890.11 }),
        (Vincent, 3) => (er(32, 64), if method == Tt { -0.232 } else { -0.243 }),
        (Vincent, 6) => (er(80, 4092), if method == Tt { -0.242 } else { -0.243 }),
        (Vincent, 10) => (er(144, 10000), if method == Tt { -0.241 } else { -0.243 }),
        _ => return None,
    };
    Some((fit, er))
}

/// Runs every trial of every requested dimension.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    run_suite_with(cfg, &CancelToken::new(), &mut |_| {})
}

/// Like [`run_suite`], reporting progress and stopping between trials once
/// `cancel` fires.
pub fn run_suite_with(
    cfg: &ExperimentConfig,
    cancel: &CancelToken,
    progress: &mut dyn FnMut(Progress<'_>),
) -> Result<SuiteReport> {
    cfg.validate()?;
    let e = &cfg.experiment;
    let data = match e.objective.variant() {
        Some(_) => Some(Arc::new(load_data(cfg)?)),
        None => None,
    };
    let mut report = SuiteReport {
        method: e.method,
        objective: e.objective,
        base_seed: e.base_seed,
        groups: Vec::new(),
        cancelled: false,
    };
    let r = (e.method == Method::Tt).then_some(cfg.tt.rank);
    for space in cfg.spaces()? {
        let d = space.dim();
        let bound = r.map(|_| request_bound(&space, &cfg.tt));
        progress(Progress::GroupStarted {
            d,
            n: space.max_points(),
            r,
        });
        let mut group = DimGroup {
            d,
            n: space.max_points(),
            r,
            rows: Vec::with_capacity(e.trials),
            summary: None,
        };
        for trial in 0..e.trials {
            if cancel.is_cancelled() {
                report.cancelled = true;
                break;
            }
            let seed = e.base_seed.wrapping_add(trial as u64);
            let row = run_trial(cfg, &space, data.as_ref(), trial, seed)?;
            progress(Progress::TrialFinished { d, row: &row });
            group.rows.push(row);
        }
        group.summary = Summary::from_rows(&group.rows, bound, reference_values(e.objective, e.method, d, group.n, r));
        report.groups.push(group);
        if report.cancelled {
            break;
        }
    }
    Ok(report)
}

fn load_data(cfg: &ExperimentConfig) -> Result<DataSplit> {
    let m = &cfg.model;
    let classes = m.training.classes;
    match (&m.train_csv, &m.test_csv) {
        (Some(train), Some(test)) => Ok(DataSplit {
            train: Dataset::read_csv(train, classes)?,
            test: Dataset::read_csv(test, classes)?,
        }),
        _ => m.data.generate(),
    }
}

fn optimize<O: Objective>(cfg: &ExperimentConfig, objective: &O, space: &SearchSpace, seed: u64) -> Result<TrialReport> {
    match cfg.experiment.method {
        Method::Tt => tt_optimize(objective, space, &TtConfig { seed, ..cfg.tt.clone() }),
        Method::Gs => grid_optimize(objective, space, &GsConfig { seed, ..cfg.gs.clone() }),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    space: &SearchSpace,
    data: Option<&Arc<DataSplit>>,
    trial: usize,
    seed: u64,
) -> Result<TrialRow> {
    let started = Instant::now();
    let kind = cfg.experiment.objective;
    let (report, fitness_sign) = match (kind.benchmark(), kind.variant(), data) {
        (Some(b), _, _) => {
            let func = BenchmarkFn::new(b, space.dim(), seed)?;
            let objective = BenchmarkObjective::new(func, space)?;
            (optimize(cfg, &objective, space, seed)?, -1.0)
        }
        (None, Some(variant), Some(data)) => {
            let settings: ObjectiveSettings = cfg.model.training.clone();
            let objective = ModelObjective::new(variant, Arc::clone(data), settings, space)?;
            (optimize(cfg, &objective, space, seed)?, 1.0)
        }
        _ => unreachable!("model objectives always carry data"),
    };
    let wall_ms = cfg
        .experiment
        .record_wall_time
        .then(|| started.elapsed().as_secs_f64() * 1e3);
    Ok(TrialRow {
        trial,
        seed,
        best_fitness: fitness_sign * report.best_score,
        distinct_evals: report.distinct_evals,
        total_requests: report.total_requests,
        wall_ms,
        best_point: Some(report.best_point),
        budget_exhausted: report.budget_exhausted,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl SuiteReport {
    /// Detail rows grouped by dimension, each group followed by its summary row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        let (method, objective) = (self.method.name(), self.objective.name());
        for g in &self.groups {
            for row in &g.rows {
                w.write_record([
                    row.trial.to_string(),
                    row.seed.to_string(),
                    method.into(),
                    objective.into(),
                    g.d.to_string(),
                    g.n.to_string(),
                    opt(g.r),
                    row.best_fitness.to_string(),
                    row.distinct_evals.to_string(),
                    row.total_requests.to_string(),
                    opt(row.wall_ms),
                ])
                .map_err(csv_err)?;
            }
            if let Some(s) = &g.summary {
                let wall: Option<f64> = g.rows.iter().map(|r| r.wall_ms).sum();
                w.write_record([
                    SUMMARY_MARKER.into(),
                    String::new(),
                    method.into(),
                    objective.into(),
                    g.d.to_string(),
                    g.n.to_string(),
                    opt(g.r),
                    s.mean_best.to_string(),
                    s.er.to_string(),
                    s.max_total_requests.to_string(),
                    opt(wall),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Rebuilds a report from its CSV form. Summaries are recomputed from the
    /// detail rows; the stored summary rows must agree with them.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::MalformedReport(m);
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?;
        if !header.iter().eq(CSV_COLUMNS) {
            return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
        }
        let mut method = None;
        let mut objective = None;
        let mut groups: Vec<DimGroup> = Vec::new();
        let mut stored: Vec<(usize, f64, usize)> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i)
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {}: column {} is not a number", line + 2, CSV_COLUMNS[i])))
            };
            let int = |i: usize| -> Result<u64> {
                field(i)
                    .parse::<u64>()
                    .map_err(|_| bad(format!("row {}: column {} is not an integer", line + 2, CSV_COLUMNS[i])))
            };
            let m: Method = serde_json::from_value(field(2).into()).map_err(|_| bad(format!("unknown method `{}`", field(2))))?;
            let o: ObjectiveKind =
                serde_json::from_value(field(3).into()).map_err(|_| bad(format!("unknown objective `{}`", field(3))))?;
            if method.is_some_and(|x| x != m) || objective.is_some_and(|x| x != o) {
                return Err(bad("rows mix methods or objectives".into()));
            }
            method = Some(m);
            objective = Some(o);
            let d = int(4)? as usize;
            let n = int(5)? as usize;
            let r = if field(6).is_empty() { None } else { Some(int(6)? as usize) };
            if field(0) == SUMMARY_MARKER {
                stored.push((d, num(7)?, int(8)? as usize));
                continue;
            }
            let row = TrialRow {
                trial: int(0)? as usize,
                seed: int(1)?,
                best_fitness: num(7)?,
                distinct_evals: int(8)? as usize,
                total_requests: int(9)? as usize,
                wall_ms: if field(10).is_empty() { None } else { Some(num(10)?) },
                best_point: None,
                budget_exhausted: false,
            };
            match groups.last_mut() {
                Some(g) if g.d == d && g.n == n && g.r == r => g.rows.push(row),
                _ => groups.push(DimGroup {
                    d,
                    n,
                    r,
                    rows: vec![row],
                    summary: None,
                }),
            }
        }
        let (method, objective) = match (method, objective) {
            (Some(m), Some(o)) => (m, o),
            _ => return Err(bad("no rows".into())),
        };
        for g in &mut groups {
            g.summary = Summary::from_rows(&g.rows, None, reference_values(objective, method, g.d, g.n, g.r));
        }
        for (d, mean, er) in stored {
            let g = groups
                .iter()
                .find(|g| g.d == d)
                .ok_or_else(|| bad(format!("summary row for d={d} has no detail rows")))?;
            let s = g.summary.as_ref().expect("nonempty group");
            if (s.mean_best - mean).abs() > 1e-12 * mean.abs().max(1.0) || s.er != er {
                return Err(bad(format!("summary row for d={d} disagrees with its detail rows")));
            }
        }
        let base_seed = groups.first().and_then(|g| g.rows.first()).map_or(0, |r| r.seed.wrapping_sub(r.trial as u64));
        Ok(SuiteReport {
            method,
            objective,
            base_seed,
            groups,
            cancelled: false,
        })
    }

    /// Reads either the JSON or the CSV form.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            serde_json::from_str(&text).map_err(|e| Error::MalformedReport(e.to_string()))
        } else {
            Self::from_csv(&text)
        }
    }
}
