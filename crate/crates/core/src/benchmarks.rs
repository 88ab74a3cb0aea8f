//! Black-box test functions (all minimized): Schwefel, Fletcher-Powell and
//! Vincent, plus an adapter that exposes them to the maximizing optimizers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::Objective;
use crate::search_space::{GridPoint, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Schwefel,
    FletcherPowell,
    Vincent,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Schwefel => "schwefel",
            BenchmarkKind::FletcherPowell => "fletcher_powell",
            BenchmarkKind::Vincent => "vincent",
        }
    }

    /// Per-coordinate search domain.
    pub fn domain(self) -> (f64, f64) {
        match self {
            BenchmarkKind::Schwefel => (-500.0, 500.0),
            BenchmarkKind::FletcherPowell => (-PI, PI),
            BenchmarkKind::Vincent => (0.25, 10.0),
        }
    }
}

fn check_domain(x: &[f64], lower: f64, upper: f64) -> Result<()> {
    match x.iter().position(|v| !(*v >= lower && *v <= upper)) {
        Some(index) => Err(Error::DomainViolation {
            index,
            value: x[index],
            lower,
            upper,
        }),
        None => Ok(()),
    }
}

fn schwefel_term(x: f64) -> f64 {
    -x * x.abs().sqrt().sin()
}

fn vincent_term(x: f64) -> f64 {
    (10.0 * x.ln()).sin()
}

/// `f(x) = −Σ x_i · sin(√|x_i|)` on `[−500, 500]^d`.
pub fn schwefel(x: &[f64]) -> Result<f64> {
    check_domain(x, -500.0, 500.0)?;
    Ok(x.iter().map(|&v| schwefel_term(v)).sum())
}

/// `f(x) = −(1/d) Σ sin(10 ln x_i)` on `[0.25, 10]^d`; global minimum −1.
pub fn vincent(x: &[f64]) -> Result<f64> {
    check_domain(x, 0.25, 10.0)?;
    let s: f64 = x.iter().map(|&v| vincent_term(v)).sum();
    Ok(-s / x.len() as f64)
}

/// A randomized Fletcher-Powell instance: `a`, `b` uniform in `[−100, 100]`
/// (row-major `dim × dim`), `alpha` uniform in `[−π, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FletcherPowellInstance {
    pub dim: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub seed: u64,
}

impl FletcherPowellInstance {
    pub fn generate(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..dim * dim).map(|_| rng.random_range(-100.0..=100.0)).collect();
        let b = (0..dim * dim).map(|_| rng.random_range(-100.0..=100.0)).collect();
        let alpha = (0..dim).map(|_| rng.random_range(-PI..=PI)).collect();
        Self {
            dim,
            a,
            b,
            alpha,
            seed,
        }
    }

    /// `A_i = Σ_j a_ij sin α_j + b_ij cos α_j`.
    pub fn targets(&self) -> Vec<f64> {
        let (s, c): (Vec<f64>, Vec<f64>) = self.alpha.iter().map(|v| (v.sin(), v.cos())).unzip();
        self.weighted(&s, &c)
    }

    fn weighted(&self, sin: &[f64], cos: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.a[i * d + j] * sin[j] + self.b[i * d + j] * cos[j])
                    .sum()
            })
            .collect()
    }
}

/// `f(x) = Σ_i (A_i − B_i(x))²` on `[−π, π]^d`.
pub fn fletcher_powell(x: &[f64], inst: &FletcherPowellInstance) -> Result<f64> {
    if x.len() != inst.dim {
        return Err(Error::ShapeMismatch {
            what: "fletcher-powell input",
            expected: inst.dim,
            actual: x.len(),
        });
    }
    check_domain(x, -PI, PI)?;
    let (s, c): (Vec<f64>, Vec<f64>) = x.iter().map(|v| (v.sin(), v.cos())).unzip();
    Ok(inst
        .targets()
        .iter()
        .zip(inst.weighted(&s, &c))
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFn {
    pub kind: BenchmarkKind,
    pub dim: usize,
    pub domain: Vec<(f64, f64)>,
    pub instance: Option<FletcherPowellInstance>,
}

impl BenchmarkFn {
    /// `seed` only matters for Fletcher-Powell, which draws a fresh instance.
    pub fn new(kind: BenchmarkKind, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("benchmark dimension must be >= 1".into()));
        }
        let instance = (kind == BenchmarkKind::FletcherPowell)
            .then(|| FletcherPowellInstance::generate(dim, seed));
        Ok(Self {
            kind,
            dim,
            domain: vec![kind.domain(); dim],
            instance,
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::ShapeMismatch {
                what: "benchmark input",
                expected: self.dim,
                actual: x.len(),
            });
        }
        match self.kind {
            BenchmarkKind::Schwefel => schwefel(x),
            BenchmarkKind::Vincent => vincent(x),
            BenchmarkKind::FletcherPowell => {
                fletcher_powell(x, self.instance.as_ref().expect("instance drawn at construction"))
            }
        }
    }
}

/// Grid-indexed view of a benchmark with per-axis tables precomputed.
///
/// Scores are the negated function values so the optimizers can maximize;
/// values are bit-identical to evaluating [`BenchmarkFn::evaluate`] on the
/// resolved grid point.
#[derive(Debug, Clone)]
pub struct BenchmarkObjective {
    func: BenchmarkFn,
    tables: Tables,
}

#[derive(Debug, Clone)]
enum Tables {
    /// Separable per-axis terms indexed `[axis][grid index]`.
    Terms(Vec<Vec<f64>>),
    /// `terms[i][offset[j] + k] = a_ij sin g_j(k) + b_ij cos g_j(k)`.
    FletcherPowell {
        targets: Vec<f64>,
        offset: Vec<usize>,
        terms: Vec<Vec<f64>>,
    },
}

impl BenchmarkObjective {
    pub fn new(func: BenchmarkFn, space: &SearchSpace) -> Result<Self> {
        if space.dim() != func.dim {
            return Err(Error::ShapeMismatch {
                what: "search space dimension",
                expected: func.dim,
                actual: space.dim(),
            });
        }
        for (axis, &(lo, hi)) in func.domain.iter().enumerate() {
            check_domain(space.grid(axis), lo, hi)?;
        }
        let grids: Vec<&[f64]> = (0..space.dim()).map(|a| space.grid(a)).collect();
        let per_axis = |f: fn(f64) -> f64| grids.iter().map(|g| g.iter().map(|&v| f(v)).collect()).collect();
        let tables = match func.kind {
            BenchmarkKind::Schwefel => Tables::Terms(per_axis(schwefel_term)),
            BenchmarkKind::Vincent => Tables::Terms(per_axis(vincent_term)),
            BenchmarkKind::FletcherPowell => {
                let inst = func.instance.as_ref().expect("instance");
                let d = inst.dim;
                let offset: Vec<usize> = grids
                    .iter()
                    .scan(0, |acc, g| {
                        let at = *acc;
                        *acc += g.len();
                        Some(at)
                    })
                    .collect();
                let terms = (0..d)
                    .map(|i| {
                        grids
                            .iter()
                            .enumerate()
                            .flat_map(|(j, g)| {
                                g.iter()
                                    .map(move |v| inst.a[i * d + j] * v.sin() + inst.b[i * d + j] * v.cos())
                            })
                            .collect()
                    })
                    .collect();
                Tables::FletcherPowell {
                    targets: inst.targets(),
                    offset,
                    terms,
                }
            }
        };
        Ok(Self { func, tables })
    }

    pub fn function(&self) -> &BenchmarkFn {
        &self.func
    }

    /// The (minimized) function value at a grid point.
    pub fn fitness(&self, point: &GridPoint) -> f64 {
        let idx = &point.indices;
        match &self.tables {
            Tables::Terms(t) => {
                let s: f64 = idx.iter().enumerate().map(|(a, &i)| t[a][i]).sum();
                match self.func.kind {
                    BenchmarkKind::Vincent => -s / idx.len() as f64,
                    _ => s,
                }
            }
            Tables::FletcherPowell {
                targets,
                offset,
                terms,
            } => targets
                .iter()
                .zip(terms)
                .map(|(a, row)| {
                    let b: f64 = idx.iter().zip(offset).map(|(&k, &o)| row[o + k]).sum();
                    (a - b) * (a - b)
                })
                .sum(),
        }
    }
}

impl Objective for BenchmarkObjective {
    fn evaluate(&self, point: &GridPoint) -> Result<f64> {
        Ok(-self.fitness(point))
    }
}
