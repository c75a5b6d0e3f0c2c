//! Per-repository analysis reports: the stable JSON shape consumed by
//! tooling and the compact text rendering for terminals.

use std::collections::{BTreeMap, BTreeSet};

use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

use crate::detect::{Confidence, DetectionOutcome, FeatureUsage, Finding, SmellId};
use crate::model::WorkflowModel;

#[derive(Debug, Error)]
pub enum ReportError {
    /// A workflow with no jobs has nothing to report on (and no denominator
    /// for ratios).
    #[error("workflow of `{repo_id}` defines no jobs")]
    ZeroJobs { repo_id: String },
}

/// Everything the analysis produced for one repository.
///
/// Serializes with a fixed key order (`repo_id`, `findings`, `applicability`,
/// `ratios`, `features`, `warnings`); `job_count` stays in memory for
/// aggregation and is not part of the JSON shape.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub repo_id: String,
    pub findings: Vec<Finding>,
    /// Per smell: whether its precondition exists in this workflow.
    pub applicability: BTreeMap<SmellId, bool>,
    /// Per smell: fraction of jobs affected (matrix instances collapse into
    /// their base job).
    pub ratios: BTreeMap<SmellId, f64>,
    pub features: FeatureUsage,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub job_count: usize,
}

// Findings flatten their location: one object per finding with `smell`,
// `jobs`, `file`, `line`, `yaml_path`, `evidence`, `confidence`.
impl Serialize for Finding {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut state = serializer.serialize_struct("Finding", 7)?;
        state.serialize_field("smell", &self.smell)?;
        state.serialize_field("jobs", &self.jobs)?;
        state.serialize_field("file", &self.location.file)?;
        state.serialize_field("line", &self.location.line)?;
        state.serialize_field("yaml_path", &self.location.yaml_path)?;
        state.serialize_field("evidence", &self.evidence)?;
        state.serialize_field("confidence", self.confidence.as_str())?;
        state.end()
    }
}

impl Serialize for Confidence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Assembles the report from detection results. `warnings` is the combined,
/// ordered list from every stage (loading, resolution, scripts, detection).
pub fn build_report(
    repo_id: &str,
    model: &WorkflowModel,
    outcome: &DetectionOutcome,
    features: FeatureUsage,
    warnings: Vec<String>,
) -> Result<AnalysisReport, ReportError> {
    if model.jobs.is_empty() {
        return Err(ReportError::ZeroJobs {
            repo_id: repo_id.to_string(),
        });
    }
    Ok(AnalysisReport {
        repo_id: repo_id.to_string(),
        ratios: smelly_job_ratios(&outcome.findings, model.jobs.len()),
        findings: outcome.findings.clone(),
        applicability: outcome.applicability.clone(),
        features,
        warnings,
        job_count: model.jobs.len(),
    })
}

/// Fraction of jobs affected per smell. Matrix instances (`job [K=v]`)
/// collapse into their base job so a wide matrix does not inflate the ratio.
fn smelly_job_ratios(findings: &[Finding], job_count: usize) -> BTreeMap<SmellId, f64> {
    let mut affected: BTreeMap<SmellId, BTreeSet<&str>> = BTreeMap::new();
    for finding in findings {
        let entry = affected.entry(finding.smell).or_default();
        for job in &finding.jobs {
            entry.insert(base_job_name(job));
        }
    }
    SmellId::ALL
        .into_iter()
        .map(|smell| {
            let count = affected.get(&smell).map_or(0, BTreeSet::len);
            (smell, count as f64 / job_count as f64)
        })
        .collect()
}

fn base_job_name(name: &str) -> &str {
    name.split(" [").next().unwrap_or(name)
}

/// Renders findings as one line each: smell, jobs, location, evidence.
pub fn render_text(report: &AnalysisReport) -> String {
    if report.findings.is_empty() {
        return "no findings\n".to_string();
    }
    let mut out = String::new();
    for finding in &report.findings {
        out.push_str(&format!(
            "{}  {}  {}  {}\n",
            finding.smell,
            finding.jobs.join(", "),
            finding.location,
            finding.evidence,
        ));
    }
    out
}
