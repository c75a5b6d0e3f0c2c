//! Cache smells: package installations without a cache, caches without a
//! fallback key, and the same cache key uploaded by several jobs.

use std::collections::{BTreeMap, BTreeSet};

use super::{ClassifiedCommand, Confidence, Finding, ScriptAnalysis, SmellId};
use crate::location::SourceLocation;
use crate::model::{expand_matrix, JobConfig, WorkflowModel};
use crate::script::CommandClass;

/// Package managers whose downloads are worth caching between runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InstallerKind {
    Pip,
    Conda,
    Apt,
}

impl InstallerKind {
    const ALL: [InstallerKind; 3] = [InstallerKind::Pip, InstallerKind::Conda, InstallerKind::Apt];

    fn matches(self, class: &CommandClass) -> bool {
        matches!(
            (self, class),
            (InstallerKind::Pip, CommandClass::PipInstall)
                | (InstallerKind::Conda, CommandClass::CondaInstall)
                | (InstallerKind::Apt, CommandClass::AptPythonInstall { .. })
        )
    }

    /// Directories (component-normalized) that hold this installer's cache.
    fn canonical_dirs(self) -> &'static [&'static [&'static str]] {
        match self {
            InstallerKind::Pip => &[&["cache", "pip"], &["pip-cache"], &["venv"]],
            InstallerKind::Conda => &[&["conda", "pkgs"], &["conda"]],
            InstallerKind::Apt => &[&["cache", "apt"], &["apt-cache"], &["apt", "archives"]],
        }
    }

    /// Variable that relocates the cache directory, if the installer has one.
    fn cache_dir_variable(self) -> Option<&'static str> {
        match self {
            InstallerKind::Pip => Some("PIP_CACHE_DIR"),
            InstallerKind::Conda => Some("CONDA_PKGS_DIRS"),
            InstallerKind::Apt => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            InstallerKind::Pip => "pip",
            InstallerKind::Conda => "conda",
            InstallerKind::Apt => "apt package",
        }
    }
}

/// Splits a path into comparable components: `~/` and leading `/` dropped,
/// a leading `$CI_PROJECT_DIR` removed (it is the root relative cache paths
/// resolve against), one leading dot stripped per component (`.cache` and
/// `cache` are the same directory for matching purposes), trailing pure-glob
/// components removed.
fn path_components(path: &str) -> Vec<String> {
    let trimmed = path.trim();
    let trimmed = trimmed.strip_prefix("~/").unwrap_or(trimmed);
    let trimmed = trimmed
        .strip_prefix("$CI_PROJECT_DIR/")
        .or_else(|| trimmed.strip_prefix("${CI_PROJECT_DIR}/"))
        .unwrap_or(trimmed);
    let mut components: Vec<String> = trimmed
        .split('/')
        .filter(|c| !c.is_empty() && *c != ".")
        .map(|c| c.strip_prefix('.').unwrap_or(c).to_string())
        .collect();
    while components
        .last()
        .is_some_and(|c| !c.is_empty() && c.chars().all(|ch| ch == '*'))
    {
        components.pop();
    }
    components
}

/// Whether the cached path covers the canonical directory: either the
/// canonical components appear contiguously inside the path (the cache names
/// that directory, or something beneath it), or a suffix of the path is a
/// prefix of the canonical components (the cache names an ancestor, e.g.
/// `.cache` covers `cache/pip`).
fn covers(path: &[String], canonical: &[&str]) -> bool {
    if path.is_empty() || canonical.is_empty() {
        return false;
    }
    if path.len() >= canonical.len()
        && path.windows(canonical.len()).any(|window| {
            window
                .iter()
                .map(String::as_str)
                .eq(canonical.iter().copied())
        })
    {
        return true;
    }
    let max_overlap = canonical.len().min(path.len() + 1);
    (1..max_overlap).any(|k| {
        path.len() >= k
            && path[path.len() - k..]
                .iter()
                .map(String::as_str)
                .eq(canonical[..k].iter().copied())
    })
}

fn kind_satisfied(kind: InstallerKind, job: &JobConfig) -> bool {
    let cached: Vec<Vec<String>> = job
        .caches
        .iter()
        .flat_map(|cache| cache.paths.iter())
        .map(|path| path_components(&path.expanded))
        .collect();
    if kind
        .canonical_dirs()
        .iter()
        .any(|canonical| cached.iter().any(|path| covers(path, canonical)))
    {
        return true;
    }
    let Some(variable) = kind.cache_dir_variable() else {
        return false;
    };
    let Some(value) = job.variables.get(variable) else {
        return false;
    };
    // The variable relocates the cache; it helps only when the target
    // directory is itself cached.
    value.expanded.split([':', ',']).any(|target| {
        let components = path_components(target);
        if components.is_empty() {
            return false;
        }
        let as_refs: Vec<&str> = components.iter().map(String::as_str).collect();
        cached.iter().any(|path| covers(path, &as_refs))
    })
}

/// A job installs Python packages (via pip, conda, or apt) but none of its
/// cache paths cover the installer's download cache, so every run downloads
/// from scratch.
pub(crate) fn detect_uncached_installs(
    model: &WorkflowModel,
    scripts: &ScriptAnalysis,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (job_name, commands) in &scripts.per_job {
        let Some(job) = model.jobs.get(job_name) else {
            continue;
        };
        let mut missing: Vec<(InstallerKind, &ClassifiedCommand)> = Vec::new();
        for kind in InstallerKind::ALL {
            let Some(first) = commands.iter().find(|c| kind.matches(&c.class)) else {
                continue;
            };
            if !kind_satisfied(kind, job) {
                missing.push((kind, first));
            }
        }
        if missing.is_empty() {
            continue;
        }
        let evidence = missing
            .iter()
            .map(|(kind, classified)| {
                format!(
                    "`{}` runs without a {} cache path",
                    classified.command.raw.trim(),
                    kind.label(),
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        findings.push(Finding {
            smell: SmellId::Sm3,
            jobs: vec![job_name.clone()],
            location: missing[0].1.command.location.clone(),
            evidence,
            confidence: Confidence::Full,
        });
    }
    findings
}

pub(crate) fn installs_applicable(scripts: &ScriptAnalysis) -> bool {
    scripts.per_job.values().flatten().any(|classified| {
        InstallerKind::ALL
            .iter()
            .any(|kind| kind.matches(&classified.class))
    })
}

/// A job caches files under a key with no `fallback_keys` while
/// `CACHE_FALLBACK_KEY` is unset, so the first run on a new key starts cold
/// even when a sibling cache exists.
pub(crate) fn detect_missing_fallback(model: &WorkflowModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for job in model.jobs.values() {
        if job.variables.contains_key("CACHE_FALLBACK_KEY") {
            continue;
        }
        let Some(cache) = job.caches.iter().find(|c| c.fallback_keys.is_empty()) else {
            continue;
        };
        findings.push(Finding {
            smell: SmellId::Sm4,
            jobs: vec![job.name.clone()],
            location: cache.location.clone(),
            evidence: format!(
                "cache key `{}` has no `fallback_keys` and `CACHE_FALLBACK_KEY` is not set; \
                 a key miss restores nothing",
                cache.key.canonical(),
            ),
            confidence: Confidence::Full,
        });
    }
    findings
}

pub(crate) fn fallback_applicable(model: &WorkflowModel) -> bool {
    model.jobs.values().any(|job| !job.caches.is_empty())
}

/// Variables that make a cache key unique per job run; keys built from them
/// cannot collide across jobs.
const JOB_UNIQUE_VARIABLES: [&str; 5] = [
    "CI_JOB_ID",
    "CI_JOB_NAME",
    "CI_JOB_NAME_SLUG",
    "CI_JOB_STARTED_AT",
    "CI_NODE_INDEX",
];

/// Canonical cache key -> uploading jobs (name, cache location), over
/// matrix-expanded jobs. With `exempt_unique`, keys derived from job-unique
/// variables are left out.
fn push_groups(
    model: &WorkflowModel,
    exempt_unique: bool,
) -> BTreeMap<String, Vec<(String, SourceLocation)>> {
    let mut groups: BTreeMap<String, Vec<(String, SourceLocation)>> = BTreeMap::new();
    for job in expand_matrix(model) {
        for cache in &job.caches {
            if !cache.policy.uploads() {
                continue;
            }
            if exempt_unique
                && cache
                    .key
                    .variables_used
                    .iter()
                    .any(|v| JOB_UNIQUE_VARIABLES.contains(&v.as_str()))
            {
                continue;
            }
            groups
                .entry(cache.key.canonical())
                .or_default()
                .push((job.name.clone(), cache.location.clone()));
        }
    }
    groups
}

fn distinct_jobs(pushers: &[(String, SourceLocation)]) -> Vec<String> {
    pushers
        .iter()
        .map(|(name, _)| name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Two or more jobs upload the same cache key; whichever finishes last wins
/// and the others' work is thrown away (and may poison later runs).
pub(crate) fn detect_shared_key_pushes(model: &WorkflowModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (key, pushers) in push_groups(model, true) {
        let jobs = distinct_jobs(&pushers);
        if jobs.len() < 2 {
            continue;
        }
        findings.push(Finding {
            smell: SmellId::Sm7,
            evidence: format!(
                "cache key `{}` is uploaded by {} jobs ({}); concurrent runs overwrite \
                 each other's archives",
                key,
                jobs.len(),
                jobs.join(", "),
            ),
            location: pushers[0].1.clone(),
            jobs,
            confidence: Confidence::Full,
        });
    }
    findings
}

/// Applicable when several jobs upload one key at all, before exempting
/// job-unique keys.
pub(crate) fn shared_key_applicable(model: &WorkflowModel) -> bool {
    push_groups(model, false)
        .values()
        .any(|pushers| distinct_jobs(pushers).len() >= 2)
}
