//! The resolved workflow model: jobs with inheritance applied, variables
//! expanded, and clauses normalized into typed form.

pub mod image;
pub mod matrix;
mod resolver;
pub mod variables;

pub use image::parse_image;
pub use matrix::{expand_matrix, virtual_name};
pub use resolver::resolve;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use thiserror::Error;

use crate::frontend::RawNode;
use crate::location::SourceLocation;

/// A string as written plus its expanded form. `fully_resolved` is true when
/// every variable reference left in `expanded` is a platform-predefined one
/// (those stay symbolic on purpose — their runtime value is not knowable
/// statically, but their identity is).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableValue {
    pub raw: String,
    pub expanded: String,
    pub fully_resolved: bool,
}

impl VariableValue {
    /// A value with no variable references at all.
    pub fn literal(text: impl Into<String>) -> Self {
        let text = text.into();
        VariableValue {
            raw: text.clone(),
            expanded: text,
            fully_resolved: true,
        }
    }
}

/// One line of a job script section, kept raw: shell-level analysis decides
/// later how to split and expand it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub text: String,
    pub location: SourceLocation,
}

/// `artifacts:` clause of a job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactsSpec {
    pub paths: Vec<String>,
    pub untracked: bool,
    pub has_reports: bool,
    /// The retention period exactly as written; `None` means the clause does
    /// not set one (the string `never` counts as set).
    pub expire_in: Option<String>,
    pub location: SourceLocation,
}

impl ArtifactsSpec {
    /// An artifacts clause that archives nothing is dropped at resolution;
    /// everything kept satisfies this.
    pub fn archives_anything(&self) -> bool {
        !self.paths.is_empty() || self.untracked || self.has_reports
    }
}

/// How a cache key is formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheKeyKind {
    /// A literal (possibly variable-bearing) string; the platform default is
    /// the literal string `default` when no key is given.
    Literal(VariableValue),
    /// `key:files:` (+ optional prefix): derived from lockfile contents.
    Files {
        files: Vec<String>,
        prefix: Option<VariableValue>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub kind: CacheKeyKind,
    /// Variable names referenced anywhere in the key expression.
    pub variables_used: BTreeSet<String>,
}

impl CacheKey {
    /// Canonical identity used to decide whether two cache entries address
    /// the same storage: the expanded key for literals, or the files+prefix
    /// recipe for file-based keys.
    pub fn canonical(&self) -> String {
        match &self.kind {
            CacheKeyKind::Literal(value) => value.expanded.clone(),
            CacheKeyKind::Files { files, prefix } => {
                let prefix = prefix
                    .as_ref()
                    .map(|p| p.expanded.as_str())
                    .unwrap_or_default();
                format!("files({}|{})", files.join(","), prefix)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    Pull,
    Push,
    PullPush,
}

impl CachePolicy {
    pub fn uploads(self) -> bool {
        matches!(self, CachePolicy::Push | CachePolicy::PullPush)
    }

    pub fn downloads(self) -> bool {
        matches!(self, CachePolicy::Pull | CachePolicy::PullPush)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CachePolicy::Pull => "pull",
            CachePolicy::Push => "push",
            CachePolicy::PullPush => "pull-push",
        }
    }
}

/// One entry of a job's `cache:` clause (a job may carry up to four).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheSpec {
    pub key: CacheKey,
    pub paths: Vec<VariableValue>,
    pub untracked: bool,
    pub policy: CachePolicy,
    pub fallback_keys: Vec<String>,
    pub location: SourceLocation,
}

/// One entry of a `needs:` clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeedRef {
    pub job: String,
    /// `Some(b)` when the entry spells out `artifacts: b`; `None` when the
    /// entry leaves artifact transfer implicit.
    pub artifacts_explicit: Option<bool>,
    pub optional: bool,
}

/// Where an image reference was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageOrigin {
    ImageClause,
    ServicesClause,
    ScriptPull,
}

/// A container image reference, split into its address parts when the
/// reference could be fully expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub raw: String,
    pub expanded: String,
    pub fully_resolved: bool,
    /// Present only when the first path component is a registry host
    /// (contains `.` or `:`, or is `localhost`).
    pub registry: Option<String>,
    pub repository: String,
    pub tag: Option<String>,
    pub digest: Option<String>,
    pub origin: ImageOrigin,
    pub location: SourceLocation,
}

/// A fully resolved job: inheritance applied, defaults filled in, variables
/// expanded. Raw spellings are retained everywhere so the job can be
/// re-expanded under additional variable scopes (matrix instances do this).
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub name: String,
    pub stage: String,
    /// `None`: no needs clause (stage ordering applies). `Some([])`: an
    /// explicit empty clause, which removes all waiting.
    pub needs: Option<Vec<NeedRef>>,
    /// `None`: no dependencies clause (all earlier artifacts are fetched).
    /// `Some([])`: an explicit empty clause, which fetches nothing.
    pub dependencies: Option<Vec<String>>,
    pub artifacts: Option<ArtifactsSpec>,
    pub caches: Vec<CacheSpec>,
    pub image: Option<ImageRef>,
    pub services: Vec<ImageRef>,
    pub before_script: Vec<ScriptLine>,
    pub script: Vec<ScriptLine>,
    pub after_script: Vec<ScriptLine>,
    pub variables: IndexMap<String, VariableValue>,
    /// Value assignments this job's `parallel:matrix` expands into; empty
    /// for ordinary jobs.
    pub matrix_instances: Vec<IndexMap<String, String>>,
    pub location: SourceLocation,
}

impl JobConfig {
    /// Raw variable map, the shape variable scopes are built from.
    pub fn raw_variables(&self) -> IndexMap<String, String> {
        self.variables
            .iter()
            .map(|(name, value)| (name.clone(), value.raw.clone()))
            .collect()
    }

    pub fn all_script_lines(&self) -> impl Iterator<Item = (&ScriptLine, ScriptSection)> {
        self.before_script
            .iter()
            .map(|l| (l, ScriptSection::Before))
            .chain(self.script.iter().map(|l| (l, ScriptSection::Main)))
            .chain(self.after_script.iter().map(|l| (l, ScriptSection::After)))
    }
}

/// Which script block a command came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptSection {
    Before,
    Main,
    After,
}

/// The `default:` block (including legacy top-level spellings), already
/// applied to jobs; kept on the model for inspection.
#[derive(Debug, Clone, Default)]
pub struct DefaultBlock {
    pub image: Option<ImageRef>,
    pub services: Vec<ImageRef>,
    pub caches: Vec<CacheSpec>,
    pub before_script: Vec<ScriptLine>,
    pub after_script: Vec<ScriptLine>,
}

/// A resolved workflow: the input to graph construction and detection.
#[derive(Debug, Clone)]
pub struct WorkflowModel {
    /// All stages in execution order, `.pre` first and `.post` last.
    pub stages: Vec<String>,
    pub global_variables: IndexMap<String, VariableValue>,
    pub default_block: DefaultBlock,
    /// Concrete jobs in document order.
    pub jobs: IndexMap<String, JobConfig>,
    /// Hidden (`.`-prefixed) entries as written, before any merging.
    pub hidden_templates: IndexMap<String, RawNode>,
    pub warnings: Vec<String>,
}

impl WorkflowModel {
    pub fn stage_index(&self, stage: &str) -> Option<usize> {
        self.stages.iter().position(|s| s == stage)
    }

    pub fn raw_global_variables(&self) -> IndexMap<String, String> {
        self.global_variables
            .iter()
            .map(|(name, value)| (name.clone(), value.raw.clone()))
            .collect()
    }
}

/// Errors while resolving the tree into a model.
#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("job `{job}` extends unknown target `{target}`")]
    UnknownExtendsTarget { job: String, target: String },
    #[error("extends chain starting at `{job}` exceeds {limit} levels (or is cyclic)")]
    ExtendsDepthExceeded { job: String, limit: usize },
    #[error("job `{job}` uses stage `{stage}` which is not defined in `stages`")]
    UnknownStage { job: String, stage: String },
    #[error("job `{job}` needs unknown job `{needs}`")]
    NeedsUnknownJob { job: String, needs: String },
}
