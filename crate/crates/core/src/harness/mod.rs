//! Experiment driver: TOML configs, seeded trial suites, CSV/JSON reports,
//! report comparison and the built-in self-test.

mod compare;
mod config;
mod selftest;
mod suite;

pub use compare::{compare, CompareRow, Comparison, Growth};
pub use config::{
    ExperimentConfig, ExperimentSection, Method, ModelSection, ObjectiveKind, SpaceSection, OUTPUT_DIR_ENV,
};
pub use selftest::{selftest, Check, SelftestReport};
pub use suite::{
    reference_values, run_suite, run_suite_with, CancelToken, DimGroup, Progress, Reference, SuiteReport, Summary,
    TrialRow, CSV_COLUMNS, SUMMARY_MARKER,
};
