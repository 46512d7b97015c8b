//! Quick detection of the largest-degree nodes of an undirected graph with a
//! random walk that occasionally jumps to a uniformly random node.
//!
//! The crate is organized as:
//!
//! - [`graph`]: compact immutable graph storage, edge-list ingestion and the
//!   exact top-k baseline;
//! - [`generators`]: preferential attachment and configuration-model graphs;
//! - [`walk`]: the walk itself and its sample streams;
//! - [`detector`]: the candidate list and stopping rules;
//! - [`analytics`]: stationary law, hitting times, extreme-value predictions
//!   and Poisson-approximation curves;
//! - [`experiments`]: replicated, seed-reproducible experiment runners.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod walk;

pub use detector::{detect_fixed_m, detect_with_rule, CandidateList, StopDecision, StopRule};
pub use error::{Error, Result};
pub use generators::{ConfigModelConfig, PaConfig, ParetoTail};
pub use graph::{DegreeRecord, Graph, NodeId};
pub use walk::{SamplingMode, StartDist, WalkConfig};
