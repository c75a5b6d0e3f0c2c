//! End-to-end analysis of one workflow file: load (with includes), resolve
//! inheritance, build the execution graph, tokenize scripts, run all
//! detectors, and assemble the report.

use std::path::Path;

use thiserror::Error;

use crate::detect::{analyze_scripts, run_detectors, scan_features, RepoContext};
use crate::frontend::{load_workflow, LoadError};
use crate::graph::{build_graph, ExecutionGraph, GraphError};
use crate::model::{resolve, ResolveError, WorkflowModel};
use crate::report::{build_report, AnalysisReport, ReportError};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// The report plus the intermediate structures, for callers that render
/// graphs or inspect the model.
#[derive(Debug)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub model: WorkflowModel,
    pub graph: ExecutionGraph,
}

/// Analyzes the workflow at `workflow`. `repo_root` anchors `include:local`
/// paths and names the repository; it defaults to the workflow's directory.
/// `is_group_repository` gates the dependency-proxy detector.
pub fn analyze_workflow(
    workflow: &Path,
    repo_root: Option<&Path>,
    is_group_repository: Option<bool>,
) -> Result<Analysis, AnalyzeError> {
    let default_root = workflow.parent().unwrap_or_else(|| Path::new("."));
    let root = repo_root.unwrap_or(default_root);
    let ctx = RepoContext {
        repo_id: derive_repo_id(workflow, repo_root),
        is_group_repository,
    };

    let document = load_workflow(workflow, root)?;
    let model = resolve(&document)?;
    let graph = build_graph(&model)?;
    let scripts = analyze_scripts(&model);
    let outcome = run_detectors(&model, &graph, &scripts, &ctx);
    let features = scan_features(&model);

    let mut warnings = model.warnings.clone();
    warnings.extend(scripts.warnings.iter().cloned());
    warnings.extend(outcome.warnings.iter().cloned());

    let report = build_report(&ctx.repo_id, &model, &outcome, features, warnings)?;
    Ok(Analysis {
        report,
        model,
        graph,
    })
}

/// The repository is named by its root directory; without one, the workflow
/// path itself serves as the identifier.
fn derive_repo_id(workflow: &Path, repo_root: Option<&Path>) -> String {
    repo_root
        .and_then(|root| root.file_name())
        .map(|name| name.to_string_lossy().into_owned())
        .unwrap_or_else(|| workflow.display().to_string())
}
