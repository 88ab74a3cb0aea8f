//! Black-box hyperparameter optimization over discretized grids.
//!
//! The crate provides a tensor-train cross-approximation optimizer
//! ([`tt_opt`]) driven by maximal-volume row selection ([`maxvol`]), an
//! exhaustive grid-search baseline ([`grid_search`]), classic test functions
//! ([`benchmarks`]), an exactly simulated quantum layer ([`quantum`]) with the
//! hybrid classifier built on it ([`model`]), and the experiment harness that
//! ties them together ([`harness`]).

pub mod benchmarks;
pub mod error;
pub mod evaluator;
pub mod grid_search;
pub mod harness;
mod linalg;
pub mod maxvol;
pub mod model;
pub mod quantum;
pub mod search_space;
pub mod tt_opt;

pub use error::{Error, Result};
pub use evaluator::{HistoryEntry, HistoryPolicy, Objective, TrialReport};
pub use grid_search::{grid_optimize, GsConfig};
pub use search_space::{AxisKind, AxisSpec, GridPoint, SearchSpace};
pub use tt_opt::{tt_optimize, TtConfig};
