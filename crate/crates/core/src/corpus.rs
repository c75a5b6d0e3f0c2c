//! Corpus analysis: run the analyzer over a directory of repositories and
//! aggregate findings into adoption and prevalence statistics.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::analyze_workflow;
use crate::detect::SmellId;
use crate::report::AnalysisReport;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus contains no analyzable repositories")]
    EmptyCorpus,
    #[error("cannot read corpus directory `{dir}`: {message}")]
    UnreadableDir { dir: String, message: String },
    #[error("cannot parse metadata file `{path}`: {message}")]
    MalformedMetadata { path: String, message: String },
}

/// A repository that could not be analyzed, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedRepo {
    pub repo_id: String,
    pub reason: String,
}

/// Result of running the analyzer over a corpus directory.
#[derive(Debug)]
pub struct CorpusRun {
    pub reports: Vec<AnalysisReport>,
    pub skipped: Vec<SkippedRepo>,
}

#[derive(Debug, Deserialize)]
struct MetadataEntry {
    is_group: Option<bool>,
}

/// Central metadata: JSON object mapping repo id to `{"is_group": bool}`.
pub fn load_central_metadata(path: &Path) -> Result<BTreeMap<String, bool>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|err| CorpusError::MalformedMetadata {
        path: path.display().to_string(),
        message: err.to_string(),
    })?;
    let entries: BTreeMap<String, MetadataEntry> =
        serde_json::from_str(&text).map_err(|err| CorpusError::MalformedMetadata {
            path: path.display().to_string(),
            message: err.to_string(),
        })?;
    Ok(entries
        .into_iter()
        .filter_map(|(repo, entry)| entry.is_group.map(|flag| (repo, flag)))
        .collect())
}

/// Analyzes every `<dir>/<repo>/.gitlab-ci.yml`, in parallel. Group status
/// comes from the repository's own `metadata.json` when present, falling
/// back to the central metadata map. Repositories that cannot be analyzed
/// are skipped with a reason, not fatal.
pub fn analyze_corpus(
    dir: &Path,
    central_metadata: &BTreeMap<String, bool>,
) -> Result<CorpusRun, CorpusError> {
    let mut repos: Vec<(String, std::path::PathBuf)> = Vec::new();
    let entries = fs::read_dir(dir).map_err(|err| CorpusError::UnreadableDir {
        dir: dir.display().to_string(),
        message: err.to_string(),
    })?;
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            repos.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    repos.sort();

    let results: Vec<Result<AnalysisReport, SkippedRepo>> = repos
        .par_iter()
        .map(|(repo_id, repo_dir)| {
            let workflow = repo_dir.join(".gitlab-ci.yml");
            if !workflow.is_file() {
                return Err(SkippedRepo {
                    repo_id: repo_id.clone(),
                    reason: "no .gitlab-ci.yml".to_string(),
                });
            }
            let is_group =
                repo_group_status(repo_dir).or_else(|| central_metadata.get(repo_id).copied());
            analyze_workflow(&workflow, Some(repo_dir), is_group)
                .map(|analysis| analysis.report)
                .map_err(|err| SkippedRepo {
                    repo_id: repo_id.clone(),
                    reason: err.to_string(),
                })
        })
        .collect();

    let mut run = CorpusRun {
        reports: Vec::new(),
        skipped: Vec::new(),
    };
    for result in results {
        match result {
            Ok(report) => run.reports.push(report),
            Err(skipped) => run.skipped.push(skipped),
        }
    }
    Ok(run)
}

fn repo_group_status(repo_dir: &Path) -> Option<bool> {
    let text = fs::read_to_string(repo_dir.join("metadata.json")).ok()?;
    let entry: MetadataEntry = serde_json::from_str(&text).ok()?;
    entry.is_group
}

/// Prevalence of one smell across the corpus.
#[derive(Debug, Clone, Serialize)]
pub struct SmellStats {
    pub smelly_repos: usize,
    pub applicable_repos: usize,
    /// Smelly among applicable; `None` when the smell applies nowhere.
    pub smelly_fraction: Option<f64>,
    /// Median affected-job ratio among smelly repositories.
    pub median_job_ratio: Option<f64>,
}

/// Repositories affected by any smell harming one quality property.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyStats {
    pub affected_repos: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyBreakdown {
    pub speed: PropertyStats,
    pub efficiency: PropertyStats,
    pub reliability: PropertyStats,
}

/// Fraction of repositories using each optional caching feature.
#[derive(Debug, Clone, Serialize)]
pub struct FeatureFractions {
    pub fallback_cache: f64,
    pub multiple_caches_per_job: f64,
    pub custom_compression: f64,
}

/// Aggregated corpus statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub repo_count: usize,
    pub smell_free_fraction: f64,
    /// Median number of findings per repository.
    pub median_smells_per_repo: f64,
    pub smells: BTreeMap<SmellId, SmellStats>,
    pub properties: PropertyBreakdown,
    pub features: FeatureFractions,
    pub skipped: Vec<SkippedRepo>,
}

/// Smells that slow pipelines down, waste storage or bandwidth, or make
/// runs flaky. A smell can harm several properties.
const SPEED_SMELLS: [SmellId; 6] = [
    SmellId::Sm2,
    SmellId::Sm3,
    SmellId::Sm4,
    SmellId::Sm7,
    SmellId::Sm9,
    SmellId::Sm10,
];
const EFFICIENCY_SMELLS: [SmellId; 7] = SmellId::ALL;
const RELIABILITY_SMELLS: [SmellId; 5] = [
    SmellId::Sm1,
    SmellId::Sm3,
    SmellId::Sm4,
    SmellId::Sm9,
    SmellId::Sm10,
];

pub fn aggregate(
    reports: &[AnalysisReport],
    skipped: Vec<SkippedRepo>,
) -> Result<CorpusStats, CorpusError> {
    if reports.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let repo_count = reports.len();

    let mut smells = BTreeMap::new();
    for smell in SmellId::ALL {
        let applicable_repos = reports
            .iter()
            .filter(|r| r.applicability.get(&smell).copied().unwrap_or(false))
            .count();
        let smelly: Vec<&AnalysisReport> = reports
            .iter()
            .filter(|r| r.findings.iter().any(|f| f.smell == smell))
            .collect();
        let ratios: Vec<f64> = smelly.iter().map(|r| r.ratios[&smell]).collect();
        smells.insert(
            smell,
            SmellStats {
                smelly_repos: smelly.len(),
                applicable_repos,
                smelly_fraction: (applicable_repos > 0)
                    .then(|| smelly.len() as f64 / applicable_repos as f64),
                median_job_ratio: median(ratios),
            },
        );
    }

    let property_stats = |harmful: &[SmellId]| {
        let affected = reports
            .iter()
            .filter(|r| r.findings.iter().any(|f| harmful.contains(&f.smell)))
            .count();
        PropertyStats {
            affected_repos: affected,
            fraction: affected as f64 / repo_count as f64,
        }
    };

    let smell_free = reports.iter().filter(|r| r.findings.is_empty()).count();
    let finding_counts: Vec<f64> = reports.iter().map(|r| r.findings.len() as f64).collect();

    Ok(CorpusStats {
        repo_count,
        smell_free_fraction: smell_free as f64 / repo_count as f64,
        median_smells_per_repo: median(finding_counts).unwrap_or(0.0),
        smells,
        properties: PropertyBreakdown {
            speed: property_stats(&SPEED_SMELLS),
            efficiency: property_stats(&EFFICIENCY_SMELLS),
            reliability: property_stats(&RELIABILITY_SMELLS),
        },
        features: FeatureFractions {
            fallback_cache: feature_fraction(reports, |f| f.uses_fallback_cache),
            multiple_caches_per_job: feature_fraction(reports, |f| f.uses_multiple_caches_per_job),
            custom_compression: feature_fraction(reports, |f| f.uses_custom_compression),
        },
        skipped,
    })
}

fn feature_fraction(
    reports: &[AnalysisReport],
    flag: impl Fn(&crate::detect::FeatureUsage) -> bool,
) -> f64 {
    reports.iter().filter(|r| flag(&r.features)).count() as f64 / reports.len() as f64
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}
