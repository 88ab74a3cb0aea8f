mod common;

use common::{brute_force_maxvol, enumerate};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorhpo_core::benchmarks::{BenchmarkFn, BenchmarkKind, BenchmarkObjective};
use tensorhpo_core::maxvol::{maxvol, ScoreMatrix};
use tensorhpo_core::tt_opt::request_bound;
use tensorhpo_core::{grid_optimize, tt_optimize, AxisSpec, GridPoint, GsConfig, SearchSpace, TtConfig};

fn lookup_objective(table: Vec<f64>, points: Vec<usize>) -> impl Fn(&GridPoint) -> f64 + Sync {
    move |p: &GridPoint| {
        let flat = p.indices.iter().zip(&points).fold(0, |acc, (&i, &n)| acc * n + i);
        table[flat]
    }
}

#[test]
fn grid_search_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let points: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(2..=5)).collect();
        let axes = points
            .iter()
            .enumerate()
            .map(|(i, &n)| AxisSpec::continuous(format!("a{i}"), 0.0, 1.0, n))
            .collect();
        let space = SearchSpace::new(axes).unwrap();
        let size: usize = points.iter().product();
        let table: Vec<f64> = (0..size).map(|_| rng.random_range(-10.0..10.0)).collect();
        let f = lookup_objective(table.clone(), points.clone());
        let report = grid_optimize(&f, &space, &GsConfig::default()).unwrap();

        let all = enumerate(&points);
        let (mut arg, mut best) = (0, f64::NEG_INFINITY);
        for (k, idx) in all.iter().enumerate() {
            let v = f(&space.point(idx).unwrap());
            if v > best {
                arg = k;
                best = v;
            }
        }
        assert_eq!(report.best_score, best);
        assert_eq!(report.best_point.indices, all[arg]);
        assert_eq!(report.distinct_evals, size);
    }
}

#[test]
fn tt_recovers_separable_optimum() {
    for d in [2, 3, 5, 8] {
        let space = SearchSpace::uniform(d, -500.0, 500.0, 4).unwrap();
        let obj = BenchmarkObjective::new(BenchmarkFn::new(BenchmarkKind::Schwefel, d, 0).unwrap(), &space).unwrap();
        let gs_best = -grid_optimize(&obj, &space, &GsConfig::default()).unwrap().best_score;
        for seed in 0..10 {
            let r = tt_optimize(&obj, &space, &TtConfig { seed, ..TtConfig::default() }).unwrap();
            assert_eq!(-r.best_score, gs_best, "d={d} seed={seed}");
        }
    }
}

#[test]
fn maxvol_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = 0;
    for _ in 0..100 {
        let cols = rng.random_range(1..=3);
        let rows = rng.random_range(cols..=8);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-5.0..5.0)).collect();
        let m = ScoreMatrix::new(rows, cols, data.clone(), (0..rows).map(|r| vec![r]).collect()).unwrap();
        let sel = maxvol(&m, 1e-6, 200).unwrap();
        let (_, best) = brute_force_maxvol(&data, rows, cols);
        assert!(sel.certified);
        assert!(sel.volume <= best * (1.0 + 1e-9));
        if sel.volume >= best * (1.0 - 1e-9) {
            agree += 1;
        }
    }
    assert!(agree >= 95, "{agree}/100");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tt_respects_request_bound(
        points in proptest::collection::vec(2usize..=5, 2..=5),
        rank in 1usize..=2,
        sweeps in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let axes = points
            .iter()
            .enumerate()
            .map(|(i, &n)| AxisSpec::continuous(format!("a{i}"), 0.0, 1.0, n))
            .collect();
        let space = SearchSpace::new(axes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size: usize = points.iter().product();
        let table: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..1.0)).collect();
        let f = lookup_objective(table, points.clone());
        let cfg = TtConfig { rank, sweeps, seed, ..TtConfig::default() };
        let report = tt_optimize(&f, &space, &cfg).unwrap();
        prop_assert!(report.distinct_evals <= request_bound(&space, &cfg));
        prop_assert!(report.total_requests >= report.distinct_evals);
        prop_assert_eq!(f(&report.best_point), report.best_score);
    }
}
