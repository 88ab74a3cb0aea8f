use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::BenchmarkKind;
use crate::error::{Error, FieldError, Result};
use crate::evaluator::HistoryPolicy;
use crate::grid_search::GsConfig;
use crate::model::{ModelObjective, ObjectiveSettings, SyntheticConfig, Variant};
use crate::search_space::{AxisSpec, SearchSpace};
use crate::tt_opt::TtConfig;

/// Environment variable that replaces the directory of `output_path`.
pub const OUTPUT_DIR_ENV: &str = "TENSORHPO_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tt,
    Gs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tt => "tt",
            Method::Gs => "gs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Schwefel,
    FletcherPowell,
    Vincent,
    ModelClassical,
    ModelHybrid,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Schwefel => "schwefel",
            ObjectiveKind::FletcherPowell => "fletcher_powell",
            ObjectiveKind::Vincent => "vincent",
            ObjectiveKind::ModelClassical => "model_classical",
            ObjectiveKind::ModelHybrid => "model_hybrid",
        }
    }

    pub fn benchmark(self) -> Option<BenchmarkKind> {
        match self {
            ObjectiveKind::Schwefel => Some(BenchmarkKind::Schwefel),
            ObjectiveKind::FletcherPowell => Some(BenchmarkKind::FletcherPowell),
            ObjectiveKind::Vincent => Some(BenchmarkKind::Vincent),
            _ => None,
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            ObjectiveKind::ModelClassical => Some(Variant::Classical),
            ObjectiveKind::ModelHybrid => Some(Variant::Hybrid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub method: Method,
    pub objective: ObjectiveKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub output_path: PathBuf,
    /// Fills the `wall_ms` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_trials() -> usize {
    100
}

/// Either explicit `axes`, or `dims` + `points` over the objective's domain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceSection {
    pub dims: Vec<usize>,
    pub points: Option<usize>,
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub training: ObjectiveSettings,
    pub data: SyntheticConfig,
    /// Load the splits from CSV instead of generating them.
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
}

fn harness_tt() -> TtConfig {
    TtConfig {
        history: HistoryPolicy::Improvements,
        ..TtConfig::default()
    }
}

fn harness_gs() -> GsConfig {
    GsConfig {
        history: HistoryPolicy::Improvements,
        ..GsConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default = "harness_tt")]
    pub tt: TtConfig,
    #[serde(default = "harness_gs")]
    pub gs: GsConfig,
    #[serde(default)]
    pub model: ModelSection,
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|s| text.get(s))
                .map(|s| s.trim().to_string())
                .unwrap_or_default();
            Error::ConfigInvalid(vec![FieldError::new(field, e.message().trim())])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Collects every field-level problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let e = &self.experiment;
        if e.trials == 0 {
            push(&mut errs, "experiment.trials", "must be >= 1".into());
        }
        if e.output_path.as_os_str().is_empty() || e.output_path.file_name().is_none() {
            push(&mut errs, "experiment.output_path", "must name a file".into());
        }
        if let Err(err) = self.tt.validate() {
            push(&mut errs, "tt", err.to_string());
        }
        if let Err(err) = self.gs.validate() {
            push(&mut errs, "gs", err.to_string());
        }
        let s = &self.space;
        if s.axes.is_empty() {
            match s.points {
                None => push(&mut errs, "space.points", "required when no axes are listed".into()),
                Some(p) if p < 2 => push(&mut errs, "space.points", "must be >= 2".into()),
                Some(_) => {}
            }
            if e.objective.benchmark().is_some() && s.dims.is_empty() {
                push(&mut errs, "space.dims", "list at least one dimension".into());
            }
        } else if s.points.is_some() {
            push(&mut errs, "space.points", "give either axes or points, not both".into());
        }
        if s.dims.contains(&0) {
            push(&mut errs, "space.dims", "dimensions must be >= 1".into());
        }
        if !s.axes.is_empty() && !(s.dims.is_empty() || s.dims == [s.axes.len()]) {
            push(&mut errs, "space.dims", format!("explicit axes fix d = {}", s.axes.len()));
        }
        if e.objective.variant().is_some() {
            if !(s.dims.is_empty() || s.dims == [5]) {
                push(&mut errs, "space.dims", "model objectives tune exactly 5 axes".into());
            }
            let t = &self.model.training;
            if t.epochs == 0 {
                push(&mut errs, "model.training.epochs", "must be >= 1".into());
            }
            if t.classes != 2 {
                push(&mut errs, "model.training.classes", "only 2-class data is supported".into());
            }
            if t.batch_size == 0 {
                push(&mut errs, "model.training.batch_size", "must be >= 1".into());
            }
            if self.model.train_csv.is_some() != self.model.test_csv.is_some() {
                push(&mut errs, "model", "train_csv and test_csv go together".into());
            }
        }
        for (i, axis) in s.axes.iter().enumerate() {
            if let Err(err) = axis.validate() {
                push(&mut errs, &format!("space.axes[{i}]"), err.to_string());
            }
        }
        if errs.is_empty() {
            match self.spaces() {
                Err(err) => push(&mut errs, "space", err.to_string()),
                Ok(spaces) => {
                    for sp in &spaces {
                        if self.experiment.method == Method::Tt && sp.dim() > 1 && self.tt.rank > sp.min_points() {
                            push(&mut errs, 
                                "tt.rank",
                                format!("rank {} exceeds the smallest axis size {}", self.tt.rank, sp.min_points()),
                            );
                            break;
                        }
                    }
                    if let Some(v) = e.objective.variant() {
                        for sp in &spaces {
                            if let Err(err) = check_model_space(v, sp) {
                                push(&mut errs, "space.axes", err.to_string());
                            }
                        }
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errs))
        }
    }

    /// One search space per requested dimension, in config order.
    pub fn spaces(&self) -> Result<Vec<SearchSpace>> {
        let s = &self.space;
        if !s.axes.is_empty() {
            let space = SearchSpace::new(s.axes.clone())?;
            if let Some(kind) = self.experiment.objective.benchmark() {
                let (lo, hi) = kind.domain();
                for a in space.axes() {
                    if a.lower < lo || a.upper > hi {
                        return Err(Error::InvalidAxis {
                            axis: a.name.clone(),
                            reason: format!("outside the {} domain [{lo}, {hi}]", kind.name()),
                        });
                    }
                }
            }
            return Ok(vec![space]);
        }
        let points = s.points.unwrap_or(0);
        match (self.experiment.objective.benchmark(), self.experiment.objective.variant()) {
            (Some(kind), _) => {
                let (lo, hi) = kind.domain();
                s.dims.iter().map(|&d| SearchSpace::uniform(d, lo, hi, points)).collect()
            }
            (None, Some(v)) => Ok(vec![ModelObjective::default_space(v, points)?]),
            (None, None) => unreachable!("every objective is a benchmark or a model"),
        }
    }

    /// `output_path` with its directory replaced by `$TENSORHPO_OUTPUT_DIR`
    /// when that variable is set.
    pub fn output_path(&self) -> PathBuf {
        resolve_output(&self.experiment.output_path, std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
    }
}

pub(crate) fn resolve_output(path: &Path, dir: Option<PathBuf>) -> PathBuf {
    match (dir, path.file_name()) {
        (Some(dir), Some(name)) if !dir.as_os_str().is_empty() => dir.join(name),
        _ => path.to_path_buf(),
    }
}

fn push(errs: &mut Vec<FieldError>, field: &str, message: String) {
    errs.push(FieldError::new(field, message));
}

fn check_model_space(variant: Variant, space: &SearchSpace) -> Result<()> {
    let needed = match variant {
        Variant::Hybrid => ["n", "q", "alpha0", "alpha_step", "alpha_factor"],
        Variant::Classical => ["n", "nq", "alpha0", "alpha_step", "alpha_factor"],
    };
    if let Some(missing) = needed.iter().find(|n| space.axis_index(n).is_none()) {
        return Err(Error::InvalidSpace(format!("missing axis `{missing}`")));
    }
    if space.dim() != 5 {
        return Err(Error::InvalidSpace(format!("expected 5 axes, got {}", space.dim())));
    }
    for name in ["n", "q", "nq", "alpha_step"] {
        if let Some(i) = space.axis_index(name) {
            if space.grid(i).iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(Error::InvalidSpace(format!("axis `{name}` must hold positive integers")));
            }
        }
    }
    if variant == Variant::Hybrid {
        let n = space.axis_index("n").expect("checked");
        if space.grid(n).iter().any(|&v| v > crate::quantum::MAX_QUBITS as f64) {
            return Err(Error::InvalidSpace(format!(
                "hybrid n is limited to {} qubits",
                crate::quantum::MAX_QUBITS
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHWEFEL: &str = r#"
        [experiment]
        method = "tt"
        objective = "schwefel"
        trials = 3
        output_path = "out/schwefel.csv"

        [space]
        dims = [3, 6]
        points = 4
    "#;

    #[test]
    fn parses_shorthand_space() {
        let cfg = ExperimentConfig::from_toml(SCHWEFEL).unwrap();
        assert_eq!(cfg.experiment.trials, 3);
        assert_eq!(cfg.tt.rank, 2);
        assert_eq!(cfg.tt.history, HistoryPolicy::Improvements);
        let spaces = cfg.spaces().unwrap();
        assert_eq!(spaces.len(), 2);
        assert_eq!(spaces[1].dim(), 6);
        assert_eq!(spaces[0].grid(0)[0], -500.0);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn collects_field_errors() {
        let text = r#"
            [experiment]
            method = "tt"
            objective = "schwefel"
            trials = 0
            output_path = ""
            [space]
            points = 1
            [tt]
            rank = 0
        "#;
        match ExperimentConfig::from_toml(text) {
            Err(Error::ConfigInvalid(errs)) => {
                let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
                for f in ["experiment.trials", "experiment.output_path", "tt", "space.points", "space.dims"] {
                    assert!(fields.contains(&f), "{fields:?}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_reported() {
        let text = SCHWEFEL.replace("trials = 3", "trails = 3");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::ConfigInvalid(errs)) => assert!(errs[0].message.contains("trails"), "{errs:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_and_domain_checks() {
        let text = SCHWEFEL.replace("points = 4", "points = 2").replace("[space]", "[tt]\nrank = 3\n[space]");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::ConfigInvalid(_))));
        let text = r#"
            [experiment]
            method = "gs"
            objective = "vincent"
            output_path = "v.csv"
            [[space.axes]]
            name = "x"
            lower = 0.0
            upper = 10.0
            points = 4
        "#;
        assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn model_space() {
        let text = r#"
            [experiment]
            method = "gs"
            objective = "model_hybrid"
            output_path = "m.csv"
            [space]
            points = 3
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.spaces().unwrap()[0].size(), 243);
        let bad = text.replace("[space]", "[model.training]\nclasses = 3\n[space]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn output_dir_override() {
        let p = Path::new("results/run.csv");
        assert_eq!(resolve_output(p, None), p);
        assert_eq!(resolve_output(p, Some("/tmp/x".into())), Path::new("/tmp/x/run.csv"));
        assert_eq!(resolve_output(p, Some("".into())), p);
    }
}
