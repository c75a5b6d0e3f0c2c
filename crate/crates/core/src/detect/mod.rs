//! The seven cache and artifact smell detectors, plus the feature scan.
//!
//! Detectors run over the resolved model, the execution graph, and the
//! classified script commands. Every finding carries the jobs involved, a
//! source location to jump to, human-readable evidence, and a confidence
//! level (`Reduced` only where the analysis had to guess).

mod artifacts;
mod caches;
pub mod features;
mod images;

pub use features::{scan_features, FeatureUsage};

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::graph::ExecutionGraph;
use crate::location::SourceLocation;
use crate::model::WorkflowModel;
use crate::script::{classify, tokenize_job, CommandClass, SimpleCommand};

/// Smell identifiers, in report order. The numbering is the tool's public
/// vocabulary (labels, reports, and filters all use `SM<n>`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SmellId {
    /// Artifacts without an expiration period.
    Sm1,
    /// Artifact transfer left implicit between dependent jobs.
    Sm2,
    /// Python package installations without a package cache.
    Sm3,
    /// Caches without a fallback key.
    Sm4,
    /// The same cache key uploaded by several jobs.
    Sm7,
    /// Images pulled straight from Docker Hub in group repositories.
    Sm9,
    /// `docker build` without `--cache-from`.
    Sm10,
}

impl SmellId {
    pub const ALL: [SmellId; 7] = [
        SmellId::Sm1,
        SmellId::Sm2,
        SmellId::Sm3,
        SmellId::Sm4,
        SmellId::Sm7,
        SmellId::Sm9,
        SmellId::Sm10,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SmellId::Sm1 => "SM1",
            SmellId::Sm2 => "SM2",
            SmellId::Sm3 => "SM3",
            SmellId::Sm4 => "SM4",
            SmellId::Sm7 => "SM7",
            SmellId::Sm9 => "SM9",
            SmellId::Sm10 => "SM10",
        }
    }

    pub fn parse(text: &str) -> Option<SmellId> {
        SmellId::ALL.into_iter().find(|id| id.as_str() == text)
    }
}

impl fmt::Display for SmellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for SmellId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// How trustworthy a finding is. `Reduced` marks findings built on guesses
/// (unresolvable references, opaque substitutions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    Full,
    Reduced,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Full => "full",
            Confidence::Reduced => "reduced",
        }
    }
}

/// One detected smell instance.
#[derive(Debug, Clone)]
pub struct Finding {
    pub smell: SmellId,
    /// Jobs involved. Pair findings list producer before consumer; group
    /// findings list every affected job in name order.
    pub jobs: Vec<String>,
    pub location: SourceLocation,
    pub evidence: String,
    pub confidence: Confidence,
}

/// Repository-level facts detection needs beyond the workflow itself.
#[derive(Debug, Clone)]
pub struct RepoContext {
    pub repo_id: String,
    /// Whether the repository lives in a group namespace; `None` when not
    /// known. Dependency-proxy analysis only applies to group repositories.
    pub is_group_repository: Option<bool>,
}

/// A command with its classification.
#[derive(Debug, Clone)]
pub struct ClassifiedCommand {
    pub command: SimpleCommand,
    pub class: CommandClass,
}

/// Tokenized and classified scripts for every job.
#[derive(Debug, Clone, Default)]
pub struct ScriptAnalysis {
    pub per_job: IndexMap<String, Vec<ClassifiedCommand>>,
    pub warnings: Vec<String>,
}

/// Tokenizes and classifies all job scripts of the model.
pub fn analyze_scripts(model: &WorkflowModel) -> ScriptAnalysis {
    let mut analysis = ScriptAnalysis::default();
    for job in model.jobs.values() {
        let tokenized = tokenize_job(job);
        analysis.warnings.extend(tokenized.warnings);
        let commands = tokenized
            .commands
            .into_iter()
            .map(|command| ClassifiedCommand {
                class: classify(&command),
                command,
            })
            .collect();
        analysis.per_job.insert(job.name.clone(), commands);
    }
    analysis
}

/// Results of a full detection run.
#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    /// Sorted by smell, then involved jobs, then line.
    pub findings: Vec<Finding>,
    /// Per smell: whether its precondition exists in this workflow at all.
    pub applicability: BTreeMap<SmellId, bool>,
    pub warnings: Vec<String>,
}

/// Runs all seven detectors.
pub fn run_detectors(
    model: &WorkflowModel,
    graph: &ExecutionGraph,
    scripts: &ScriptAnalysis,
    ctx: &RepoContext,
) -> DetectionOutcome {
    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    let mut applicability = BTreeMap::new();

    findings.extend(artifacts::detect_missing_expiry(model));
    applicability.insert(SmellId::Sm1, artifacts::expiry_applicable(model));

    findings.extend(artifacts::detect_implicit_transfer(model, graph));
    applicability.insert(SmellId::Sm2, artifacts::transfer_applicable(model, graph));

    findings.extend(caches::detect_uncached_installs(model, scripts));
    applicability.insert(SmellId::Sm3, caches::installs_applicable(scripts));

    findings.extend(caches::detect_missing_fallback(model));
    applicability.insert(SmellId::Sm4, caches::fallback_applicable(model));

    findings.extend(caches::detect_shared_key_pushes(model));
    applicability.insert(SmellId::Sm7, caches::shared_key_applicable(model));

    let proxy = images::detect_unproxied_images(model, scripts, ctx);
    findings.extend(proxy.findings);
    warnings.extend(proxy.warnings);
    applicability.insert(SmellId::Sm9, proxy.applicable);

    let builds = images::detect_uncached_builds(scripts);
    findings.extend(builds.findings);
    warnings.extend(builds.warnings);
    applicability.insert(SmellId::Sm10, builds.applicable);

    findings.sort_by(|a, b| {
        (a.smell, &a.jobs, a.location.line).cmp(&(b.smell, &b.jobs, b.location.line))
    });
    DetectionOutcome {
        findings,
        applicability,
        warnings,
    }
}

/// Findings plus side observations, for detectors that produce warnings.
#[derive(Debug, Default)]
pub(crate) struct DetectorOutput {
    pub findings: Vec<Finding>,
    pub warnings: Vec<String>,
    pub applicable: bool,
}
