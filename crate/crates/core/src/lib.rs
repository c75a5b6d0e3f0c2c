//! Static analysis of GitLab CI/CD workflows for cache and artifact smells.
//!
//! The pipeline has five stages, each usable on its own:
//!
//! 1. [`frontend`] parses YAML into a location-carrying tree, resolving
//!    anchors, merge keys, and local includes.
//! 2. [`model`] resolves GitLab inheritance (`extends`, `default:`, legacy
//!    top-level keys, `inherit:`, variable expansion, `parallel:matrix`)
//!    into per-job configurations.
//! 3. [`graph`] derives the execution order (stage waits and `needs` edges).
//! 4. [`script`] tokenizes shell scripts and classifies the commands that
//!    matter for caching (docker, pip, conda, apt).
//! 5. [`detect`] runs the seven smell detectors over all of the above.
//!
//! [`analyzer::analyze_workflow`] wires the stages together for one
//! repository; [`corpus`] runs it over many and aggregates statistics;
//! [`eval`] scores detector output against hand-labeled ground truth.

pub mod analyzer;
pub mod corpus;
pub mod detect;
pub mod eval;
pub mod frontend;
pub mod graph;
pub mod location;
pub mod model;
pub mod report;
pub mod script;

pub use analyzer::{analyze_workflow, Analysis, AnalyzeError};
pub use detect::{Confidence, Finding, RepoContext, SmellId};
pub use location::SourceLocation;
pub use report::AnalysisReport;
