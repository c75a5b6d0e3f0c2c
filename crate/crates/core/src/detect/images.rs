//! Container image smells: images pulled straight from Docker Hub in group
//! repositories (bypassing the dependency proxy) and `docker build` runs
//! that cannot reuse layers.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use super::{Confidence, DetectorOutput, Finding, RepoContext, ScriptAnalysis, SmellId};
use crate::model::{parse_image, ImageOrigin, ImageRef, JobConfig, WorkflowModel};
use crate::script::CommandClass;

/// Registry hosts that mean "Docker Hub".
const DOCKER_HUB_HOSTS: [&str; 3] = ["docker.io", "index.docker.io", "registry-1.docker.io"];

/// Variables whose presence in a raw reference marks deliberate use of the
/// dependency proxy.
const PROXY_VARIABLES: [&str; 3] = [
    "CI_DEPENDENCY_PROXY_GROUP_IMAGE_PREFIX",
    "CI_DEPENDENCY_PROXY_DIRECT_GROUP_IMAGE_PREFIX",
    "CI_DEPENDENCY_PROXY_SERVER",
];

/// Whether the reference routes through the dependency proxy.
fn is_proxied(image: &ImageRef) -> bool {
    PROXY_VARIABLES.iter().any(|v| image.raw.contains(v))
        || image.expanded.contains("/dependency_proxy/")
}

/// Whether the registry position is a variable (`$CI_REGISTRY_IMAGE/app`),
/// which can never be Docker Hub.
fn symbolic_registry(expanded: &str) -> bool {
    let head = expanded.split('/').next().unwrap_or("");
    expanded.starts_with('$') || (expanded.contains('/') && head.contains('$'))
}

fn is_docker_hub(image: &ImageRef) -> bool {
    match &image.registry {
        None => true,
        Some(host) => {
            let host = host.split(':').next().unwrap_or("").to_ascii_lowercase();
            DOCKER_HUB_HOSTS.contains(&host.as_str())
        }
    }
}

/// Every image the workflow pulls: `image:` and `services:` clauses plus
/// `docker pull` commands, in job order.
fn pull_candidates(model: &WorkflowModel, scripts: &ScriptAnalysis) -> Vec<(String, ImageRef)> {
    let mut candidates = Vec::new();
    for job in model.jobs.values() {
        if let Some(image) = &job.image {
            candidates.push((job.name.clone(), image.clone()));
        }
        for service in &job.services {
            candidates.push((job.name.clone(), service.clone()));
        }
        let Some(commands) = scripts.per_job.get(&job.name) else {
            continue;
        };
        let scope = expansion_scope(job);
        for classified in commands {
            let CommandClass::DockerPull { image_index } = classified.class else {
                continue;
            };
            let Some(word) = classified.command.words.get(image_index) else {
                continue;
            };
            let mut parsed = parse_image(
                &word.raw,
                &[&scope],
                ImageOrigin::ScriptPull,
                classified.command.location.clone(),
            );
            // Command substitutions stay opaque; the parsed text alone
            // cannot see that.
            parsed.fully_resolved &= word.fully_resolved;
            candidates.push((job.name.clone(), parsed));
        }
    }
    candidates
}

fn expansion_scope(job: &JobConfig) -> IndexMap<String, String> {
    job.variables
        .iter()
        .map(|(name, value)| (name.clone(), value.expanded.clone()))
        .collect()
}

/// Image references the workflow itself produces (`docker build -t`,
/// `docker push`); pulling those back is not a Docker Hub download.
fn self_built_images(scripts: &ScriptAnalysis) -> BTreeSet<String> {
    let mut built = BTreeSet::new();
    for classified in scripts.per_job.values().flatten() {
        match &classified.class {
            CommandClass::DockerBuild { tags, .. } => built.extend(tags.iter().cloned()),
            CommandClass::DockerPush { image_index } => {
                if let Some(word) = classified.command.words.get(*image_index) {
                    built.insert(word.text.clone());
                }
            }
            _ => {}
        }
    }
    built
}

/// In a group repository, images fetched straight from Docker Hub instead of
/// through the group's dependency proxy: every pull hits Docker Hub rate
/// limits and downloads over the public internet.
pub(crate) fn detect_unproxied_images(
    model: &WorkflowModel,
    scripts: &ScriptAnalysis,
    ctx: &RepoContext,
) -> DetectorOutput {
    let mut output = DetectorOutput::default();
    let built = self_built_images(scripts);
    let candidates: Vec<(String, ImageRef)> = pull_candidates(model, scripts)
        .into_iter()
        .filter(|(_, image)| !built.contains(&image.expanded))
        .collect();

    match ctx.is_group_repository {
        Some(true) => {}
        Some(false) => return output,
        None => {
            if !candidates.is_empty() {
                output.warnings.push(
                    "repository group status unknown; dependency proxy analysis skipped"
                        .to_string(),
                );
            }
            return output;
        }
    }
    output.applicable = !candidates.is_empty();

    // One finding per image, grouping every job that pulls it.
    let mut groups: IndexMap<String, (Vec<String>, ImageRef)> = IndexMap::new();
    let mut unresolved: BTreeSet<String> = BTreeSet::new();
    for (job, image) in candidates {
        if is_proxied(&image) {
            continue;
        }
        if !image.fully_resolved {
            if unresolved.insert(image.raw.clone()) {
                output.warnings.push(format!(
                    "image `{}` could not be resolved; Docker Hub check skipped \
                     (reduced confidence)",
                    image.raw,
                ));
            }
            continue;
        }
        if symbolic_registry(&image.expanded) || !is_docker_hub(&image) {
            continue;
        }
        groups
            .entry(image.expanded.clone())
            .or_insert_with(|| (Vec::new(), image))
            .0
            .push(job);
    }

    for (expanded, (jobs, image)) in groups {
        let jobs: Vec<String> = jobs
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        output.findings.push(Finding {
            smell: SmellId::Sm9,
            jobs,
            location: image.location.clone(),
            evidence: format!(
                "image `{expanded}` is pulled directly from Docker Hub; \
                 the group dependency proxy is not used",
            ),
            confidence: Confidence::Full,
        });
    }
    output
}

/// `docker build` without `--cache-from` rebuilds every layer from scratch
/// on fresh runners. `docker buildx bake` configures caching in its bake
/// file, which this analysis does not read, so it only gets a note.
pub(crate) fn detect_uncached_builds(scripts: &ScriptAnalysis) -> DetectorOutput {
    let mut output = DetectorOutput::default();
    for (job, commands) in &scripts.per_job {
        for classified in commands {
            match &classified.class {
                CommandClass::DockerBuild { cache_from, .. } => {
                    output.applicable = true;
                    if *cache_from {
                        continue;
                    }
                    output.findings.push(Finding {
                        smell: SmellId::Sm10,
                        jobs: vec![job.clone()],
                        location: classified.command.location.clone(),
                        evidence: format!(
                            "`{}` builds without `--cache-from`; \
                             layers of previously built images are not reused",
                            classified.command.raw.trim(),
                        ),
                        confidence: Confidence::Full,
                    });
                }
                CommandClass::DockerBuildxBake => {
                    output.applicable = true;
                    output.warnings.push(format!(
                        "`{job}` uses `docker buildx bake`; layer caching is configured \
                         in the bake file and was not analyzed",
                    ));
                }
                _ => {}
            }
        }
    }
    output
}
