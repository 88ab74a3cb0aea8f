use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{BenchmarkFn, BenchmarkKind, BenchmarkObjective};
use crate::grid_search::{grid_optimize, GsConfig};
use crate::maxvol::{self, ScoreMatrix};
use crate::model::{cross_entropy, ModelSpec};
use crate::quantum::{self, QuantumLayerSpec};
use crate::search_space::{AxisSpec, SearchSpace};
use crate::tt_opt::{request_bound, tt_optimize, TtConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid_endpoints() -> Outcome {
    let g = AxisSpec::continuous("x", -500.0, 500.0, 4).discretize().map_err(|e| e.to_string())?;
    let ladder = AxisSpec::integer("n", 4.0, 16.0, 13).discretize().map_err(|e| e.to_string())?;
    ensure(
        g[0] == -500.0 && g[3] == 500.0 && ladder == (4..=16).map(f64::from).collect::<Vec<_>>(),
        format!("{g:?}"),
    )
}

fn schwefel_grid_search() -> Outcome {
    let space = SearchSpace::uniform(3, -500.0, 500.0, 4).map_err(|e| e.to_string())?;
    let obj = BenchmarkObjective::new(
        BenchmarkFn::new(BenchmarkKind::Schwefel, 3, 0).map_err(|e| e.to_string())?,
        &space,
    )
    .map_err(|e| e.to_string())?;
    let r = grid_optimize(&obj, &space, &GsConfig::default()).map_err(|e| e.to_string())?;
    let best = -r.best_score;
    ensure(
        (best + 541.76).abs() < 0.5 && r.distinct_evals == 64,
        format!("best {best:.4}, {} evaluations", r.distinct_evals),
    )
}

fn tt_matches_grid_on_schwefel() -> Outcome {
    for d in [3, 6] {
        let space = SearchSpace::uniform(d, -500.0, 500.0, 4).map_err(|e| e.to_string())?;
        let obj = BenchmarkObjective::new(
            BenchmarkFn::new(BenchmarkKind::Schwefel, d, 0).map_err(|e| e.to_string())?,
            &space,
        )
        .map_err(|e| e.to_string())?;
        let optimum = -(d as f64) * BenchmarkKind::Schwefel.domain().0 * (500f64).sqrt().sin();
        for seed in 0..5 {
            let cfg = TtConfig { seed, ..TtConfig::default() };
            let r = tt_optimize(&obj, &space, &cfg).map_err(|e| e.to_string())?;
            let bound = request_bound(&space, &cfg);
            if r.distinct_evals > bound || (r.best_score + optimum).abs() > 1e-9 {
                return Err(format!(
                    "d={d} seed={seed}: best {} evals {} bound {bound}",
                    -r.best_score, r.distinct_evals
                ));
            }
        }
    }
    Ok("d=3,6 x 5 seeds".into())
}

fn maxvol_against_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    let total = 40;
    for _ in 0..total {
        let rows = rng.random_range(3..=7);
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = ScoreMatrix::from_rows(&data).map_err(|e| e.to_string())?;
        let sel = maxvol::maxvol(&m, 1e-6, 100).map_err(|e| e.to_string())?;
        let mut best: f64 = 0.0;
        for a in 0..rows {
            for b in a + 1..rows {
                best = best.max(maxvol::volume(&m, &[a, b]).map_err(|e| e.to_string())?);
            }
        }
        if !sel.certified {
            return Err("selection not certified".into());
        }
        if sel.volume >= best * (1.0 - 1e-9) {
            hits += 1;
        }
    }
    ensure(hits * 100 >= total * 90, format!("{hits}/{total} maximal"))
}

fn quantum_layer() -> Outcome {
    let spec = QuantumLayerSpec::new(3, 2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
    let theta: Vec<f64> = (0..spec.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
    let state = quantum::prepare(&spec, &x, &theta).map_err(|e| e.to_string())?;
    let jac = quantum::gradient(&spec, &x, &theta).map_err(|e| e.to_string())?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        let mut p = theta.clone();
        p[k] += h;
        let plus = quantum::forward(&spec, &x, &p).map_err(|e| e.to_string())?;
        p[k] -= 2.0 * h;
        let minus = quantum::forward(&spec, &x, &p).map_err(|e| e.to_string())?;
        for i in 0..3 {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            worst = worst.max((fd - jac.wrt_params[i * theta.len() + k]).abs());
        }
    }
    ensure(
        (state.norm_sqr() - 1.0).abs() < 1e-10 && worst < 1e-6,
        format!("norm {:.3e}, max shift/fd gap {worst:.2e}", (state.norm_sqr() - 1.0).abs()),
    )
}

fn parameter_counts() -> Outcome {
    let h = ModelSpec::hybrid(13, 4, 2);
    let c = ModelSpec::classical(16, 80, 2);
    ensure(
        h.param_count() == 6749 && h.variational_count() == 52 && c.param_count() == 9730,
        format!("hybrid {} ({} variational), classical {}", h.param_count(), h.variational_count(), c.param_count()),
    )
}

fn loss_closed_forms() -> Outcome {
    let a = cross_entropy(&[0.5, 0.5], 1).map_err(|e| e.to_string())?;
    let b = cross_entropy(&[0.1, 0.9], 0).map_err(|e| e.to_string())?;
    ensure(
        (a - 2f64.ln()).abs() < 1e-12 && (b - 10f64.ln()).abs() < 1e-12,
        format!("{a:.6}, {b:.6}"),
    )
}

/// Runs the built-in reference checks; takes well under a second in release.
pub fn selftest() -> SelftestReport {
    let checks: [(&str, fn() -> Outcome); 7] = [
        ("grid_endpoints", grid_endpoints),
        ("schwefel_grid_search", schwefel_grid_search),
        ("tt_matches_grid_on_schwefel", tt_matches_grid_on_schwefel),
        ("maxvol_against_brute_force", maxvol_against_brute_force),
        ("quantum_layer", quantum_layer),
        ("parameter_counts", parameter_counts),
        ("loss_closed_forms", loss_closed_forms),
    ];
    SelftestReport {
        checks: checks
            .iter()
            .map(|(name, run)| {
                let (passed, detail) = match run() {
                    Ok(d) => (true, d),
                    Err(d) => (false, d),
                };
                Check {
                    name: name.to_string(),
                    passed,
                    detail,
                }
            })
            .collect(),
    }
}
