//! Expansion of `parallel:matrix` jobs into the virtual jobs the platform
//! actually runs.
//!
//! Each matrix assignment produces a job named `base [K1=v1, K2=v2, ...]`
//! whose variable scope has the assignment layered innermost, so cache keys
//! and image references that mention matrix variables take their
//! per-instance values. Detection of same-key contention runs over these
//! virtual jobs — two instances writing the same expanded key are exactly
//! the hazard being looked for.

use indexmap::IndexMap;

use super::resolver::reexpand_job;
use super::{JobConfig, WorkflowModel};

/// The platform's display name for a matrix instance.
pub fn virtual_name(base: &str, assignment: &IndexMap<String, String>) -> String {
    let parts: Vec<String> = assignment
        .iter()
        .map(|(name, value)| format!("{name}={value}"))
        .collect();
    format!("{base} [{}]", parts.join(", "))
}

/// Returns the jobs of `model` with matrix jobs replaced by their expanded
/// virtual instances; ordinary jobs pass through unchanged. Document order
/// is preserved, instances appear in declaration order.
pub fn expand_matrix(model: &WorkflowModel) -> Vec<JobConfig> {
    let global_raw = model.raw_global_variables();
    let mut expanded = Vec::with_capacity(model.jobs.len());
    for job in model.jobs.values() {
        if job.matrix_instances.is_empty() {
            expanded.push(job.clone());
            continue;
        }
        for assignment in &job.matrix_instances {
            let mut instance = job.clone();
            instance.name = virtual_name(&job.name, assignment);
            instance.matrix_instances = vec![assignment.clone()];
            // Instance values shadow job variables, which already shadow
            // globals; job.variables carries the merged job+global raw map.
            let job_raw = job.raw_variables();
            reexpand_job(&mut instance, &[assignment, &job_raw, &global_raw]);
            for (name, value) in assignment {
                instance
                    .variables
                    .insert(name.clone(), super::VariableValue::literal(value.clone()));
            }
            expanded.push(instance);
        }
    }
    expanded
}
