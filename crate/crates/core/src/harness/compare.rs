use serde::{Deserialize, Serialize};

use super::config::{Method, ObjectiveKind};
use super::suite::{DimGroup, SuiteReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub d: usize,
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_b − mean_a`.
    pub mean_delta: f64,
    pub er_a: usize,
    pub er_b: usize,
    /// `er_a / er_b`.
    pub er_ratio: f64,
}

/// ER growth between consecutive dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub from_d: usize,
    pub to_d: usize,
    pub er_growth_a: f64,
    pub er_growth_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub objective: ObjectiveKind,
    pub method_a: Method,
    pub method_b: Method,
    pub rows: Vec<CompareRow>,
    pub growth: Vec<Growth>,
}

fn summarized(report: &SuiteReport) -> Result<Vec<&DimGroup>> {
    let mut groups: Vec<&DimGroup> = report.groups.iter().collect();
    if let Some(g) = groups.iter().find(|g| g.summary.is_none()) {
        return Err(Error::MismatchedExperiments(format!("d={} has no finished trials", g.d)));
    }
    groups.sort_by_key(|g| g.d);
    if groups.windows(2).any(|w| w[0].d == w[1].d) {
        return Err(Error::MismatchedExperiments("a report lists the same d twice".into()));
    }
    Ok(groups)
}

/// Side-by-side mean best fitness and ER per dimension, ascending in `d`.
pub fn compare(a: &SuiteReport, b: &SuiteReport) -> Result<Comparison> {
    if a.objective != b.objective {
        return Err(Error::MismatchedExperiments(format!(
            "objectives differ: {} vs {}",
            a.objective.name(),
            b.objective.name()
        )));
    }
    let (ga, gb) = (summarized(a)?, summarized(b)?);
    let dims = |g: &[&DimGroup]| g.iter().map(|g| (g.d, g.n)).collect::<Vec<_>>();
    if dims(&ga) != dims(&gb) {
        return Err(Error::MismatchedExperiments(format!(
            "spaces differ: (d, n) {:?} vs {:?}",
            dims(&ga),
            dims(&gb)
        )));
    }
    let rows: Vec<CompareRow> = ga
        .iter()
        .zip(&gb)
        .map(|(x, y)| {
            let (sx, sy) = (x.summary.as_ref().expect("checked"), y.summary.as_ref().expect("checked"));
            CompareRow {
                d: x.d,
                n: x.n,
                mean_a: sx.mean_best,
                mean_b: sy.mean_best,
                mean_delta: sy.mean_best - sx.mean_best,
                er_a: sx.er,
                er_b: sy.er,
                er_ratio: sx.er as f64 / sy.er.max(1) as f64,
            }
        })
        .collect();
    let growth = rows
        .windows(2)
        .map(|w| Growth {
            from_d: w[0].d,
            to_d: w[1].d,
            er_growth_a: w[1].er_a as f64 / w[0].er_a.max(1) as f64,
            er_growth_b: w[1].er_b as f64 / w[0].er_b.max(1) as f64,
        })
        .collect();
    Ok(Comparison {
        objective: a.objective,
        method_a: a.method,
        method_b: b.method,
        rows,
        growth,
    })
}

impl Comparison {
    /// Plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let (a, b) = (self.method_a.name(), self.method_b.name());
        let mut out = format!(
            "{:>4} {:>4} {:>16} {:>16} {:>14} {:>10} {:>10} {:>9}\n",
            "d",
            "n",
            format!("mean_{a}"),
            format!("mean_{b}"),
            "delta",
            format!("er_{a}"),
            format!("er_{b}"),
            "er_ratio"
        );
        for r in &self.rows {
            out += &format!(
                "{:>4} {:>4} {:>16.6} {:>16.6} {:>14.6} {:>10} {:>10} {:>9.4}\n",
                r.d, r.n, r.mean_a, r.mean_b, r.mean_delta, r.er_a, r.er_b, r.er_ratio
            );
        }
        for g in &self.growth {
            out += &format!(
                "er growth d {}->{}: {a} x{:.3}, {b} x{:.3}\n",
                g.from_d, g.to_d, g.er_growth_a, g.er_growth_b
            );
        }
        out
    }
}
