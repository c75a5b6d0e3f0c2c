//! Scan for adoption of caching-related platform features, reported
//! alongside findings and aggregated over corpora.

use serde::Serialize;

use crate::model::WorkflowModel;

/// Variables that tune archive compression or switch the fastzip archiver.
const COMPRESSION_VARIABLES: [&str; 3] = [
    "FF_USE_FASTZIP",
    "ARTIFACT_COMPRESSION_LEVEL",
    "CACHE_COMPRESSION_LEVEL",
];

/// Which optional caching features a workflow uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeatureUsage {
    pub uses_fallback_cache: bool,
    pub uses_multiple_caches_per_job: bool,
    pub uses_custom_compression: bool,
}

pub fn scan_features(model: &WorkflowModel) -> FeatureUsage {
    let has_variable = |name: &str| {
        model.global_variables.contains_key(name)
            || model
                .jobs
                .values()
                .any(|job| job.variables.contains_key(name))
    };
    FeatureUsage {
        uses_fallback_cache: model.jobs.values().any(|job| {
            job.caches
                .iter()
                .any(|cache| !cache.fallback_keys.is_empty())
        }) || has_variable("CACHE_FALLBACK_KEY"),
        uses_multiple_caches_per_job: model.jobs.values().any(|job| job.caches.len() >= 2),
        uses_custom_compression: COMPRESSION_VARIABLES.iter().any(|name| has_variable(name)),
    }
}
