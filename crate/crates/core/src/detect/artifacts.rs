//! Artifact smells: archives kept forever and artifact transfers left
//! implicit between dependent jobs.

use super::{Confidence, Finding, SmellId};
use crate::graph::ExecutionGraph;
use crate::model::{JobConfig, WorkflowModel};

/// A job uploads artifacts but never says when they may be deleted, so they
/// accumulate on the server until someone cleans up by hand.
pub(crate) fn detect_missing_expiry(model: &WorkflowModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for job in model.jobs.values() {
        let Some(artifacts) = &job.artifacts else {
            continue;
        };
        if artifacts.expire_in.is_some() {
            continue;
        }
        findings.push(Finding {
            smell: SmellId::Sm1,
            jobs: vec![job.name.clone()],
            location: artifacts.location.clone(),
            evidence: format!(
                "artifacts of `{}` ({}) have no `expire_in` and are kept until deleted manually",
                job.name,
                describe_archive(job),
            ),
            confidence: Confidence::Full,
        });
    }
    findings
}

pub(crate) fn expiry_applicable(model: &WorkflowModel) -> bool {
    model.jobs.values().any(|job| job.artifacts.is_some())
}

fn describe_archive(job: &JobConfig) -> String {
    let artifacts = job.artifacts.as_ref().expect("caller checked artifacts");
    let mut parts: Vec<String> = artifacts.paths.clone();
    if artifacts.untracked {
        parts.push("untracked files".to_string());
    }
    if artifacts.has_reports {
        parts.push("reports".to_string());
    }
    parts.join(", ")
}

/// A downstream job waits on an artifact producer but declares neither
/// `dependencies` nor an explicit `artifacts:` choice on the matching
/// `needs` entry, so the transfer rides on defaults nobody wrote down.
pub(crate) fn detect_implicit_transfer(
    model: &WorkflowModel,
    graph: &ExecutionGraph,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    for consumer in model.jobs.values() {
        if consumer.dependencies.is_some() {
            // Any dependencies clause, even an empty one, is an explicit
            // statement about artifact transfer.
            continue;
        }
        for (upstream, _) in graph.upstreams(&consumer.name) {
            let Some(producer) = model.jobs.get(upstream) else {
                continue;
            };
            if producer.artifacts.is_none() {
                continue;
            }
            let declared = consumer.needs.as_deref().is_some_and(|needs| {
                needs
                    .iter()
                    .any(|n| n.job == producer.name && n.artifacts_explicit.is_some())
            });
            if declared {
                continue;
            }
            findings.push(Finding {
                smell: SmellId::Sm2,
                jobs: vec![producer.name.clone(), consumer.name.clone()],
                location: consumer.location.clone(),
                evidence: format!(
                    "`{}` receives the artifacts of `{}` implicitly; \
                     neither `dependencies` nor `needs:artifacts` declares the transfer",
                    consumer.name, producer.name,
                ),
                confidence: Confidence::Full,
            });
        }
    }
    findings
}

/// Applicable when at least one waiting pair with an artifact producer
/// upstream exists, whether or not the transfer is declared.
pub(crate) fn transfer_applicable(model: &WorkflowModel, graph: &ExecutionGraph) -> bool {
    model.jobs.values().any(|consumer| {
        graph.upstreams(&consumer.name).any(|(upstream, _)| {
            model
                .jobs
                .get(upstream)
                .is_some_and(|producer| producer.artifacts.is_some())
        })
    })
}
