//! Resolution of a located tree into a [`WorkflowModel`].
//!
//! This is where the platform's layering rules live: `extends` chains are
//! deep-merged (mappings recursively, everything else replaced wholesale),
//! the `default:` block and its legacy top-level spellings are applied
//! per top-level key as indivisible units — a job that sets its own `cache:`
//! inherits nothing from the default cache, not even sibling subkeys — and
//! variables expand with job scope over global scope.

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::frontend::tree::{MapEntry, NodeValue, RawDocument, RawNode};

use super::image::parse_image;
use super::variables::{expand, references_in};
use super::{
    ArtifactsSpec, CacheKey, CacheKeyKind, CachePolicy, CacheSpec, DefaultBlock, ImageOrigin,
    JobConfig, NeedRef, ResolveError, ScriptLine, VariableValue, WorkflowModel,
};

/// Top-level keys that configure the pipeline rather than define jobs.
pub const RESERVED_TOP_LEVEL_KEYS: &[&str] = &[
    "stages",
    "types",
    "variables",
    "default",
    "include",
    "workflow",
    "image",
    "services",
    "cache",
    "before_script",
    "after_script",
];

/// Keys of the `default:` block this model cares about (also valid as
/// legacy top-level keys).
const DEFAULT_KEYS: &[&str] = &[
    "image",
    "services",
    "cache",
    "before_script",
    "after_script",
];

const EXTENDS_DEPTH_LIMIT: usize = 11;
const MAX_CACHES_PER_JOB: usize = 4;
const MAX_KEY_FILES: usize = 2;
const MAX_FALLBACK_KEYS: usize = 5;
const MAX_MATRIX_INSTANCES: usize = 200;
const FALLBACK_STAGES: &[&str] = &["build", "test", "deploy"];

/// Resolves a loaded document into a workflow model.
pub fn resolve(doc: &RawDocument) -> Result<WorkflowModel, ResolveError> {
    Resolver::new(doc).run()
}

struct Resolver<'a> {
    warnings: Vec<String>,
    /// Concrete job entries in document order.
    job_entries: IndexMap<String, &'a MapEntry>,
    /// Hidden (`.`-prefixed) entries, reachable as extends targets.
    hidden_entries: IndexMap<String, &'a MapEntry>,
    /// Memo of fully extends-merged configurations.
    merged: HashMap<String, RawNode>,
    global_raw: IndexMap<String, String>,
    stages: Vec<String>,
    defaults: Vec<(String, RawNode)>,
    root: &'a RawNode,
}

impl<'a> Resolver<'a> {
    fn new(doc: &'a RawDocument) -> Self {
        Resolver {
            warnings: doc.warnings.clone(),
            job_entries: IndexMap::new(),
            hidden_entries: IndexMap::new(),
            merged: HashMap::new(),
            global_raw: IndexMap::new(),
            stages: Vec::new(),
            defaults: Vec::new(),
            root: &doc.root,
        }
    }

    fn run(mut self) -> Result<WorkflowModel, ResolveError> {
        self.classify_top_level();
        self.stages = self.resolve_stages();
        self.global_raw = self
            .root
            .get("variables")
            .map_or_else(IndexMap::new, |node| {
                raw_variable_map(node, "top-level `variables`", &mut self.warnings)
            });
        self.defaults = self.collect_defaults();

        let mut jobs: IndexMap<String, JobConfig> = IndexMap::new();
        let names: Vec<String> = self.job_entries.keys().cloned().collect();
        for name in names {
            let merged = self.merged_config(&name, None, 0)?;
            let merged = self.apply_defaults(merged);
            let job = self.extract_job(&name, &merged)?;
            jobs.insert(name, job);
        }
        self.validate_references(&mut jobs)?;

        let global_variables: IndexMap<String, VariableValue> = self
            .global_raw
            .iter()
            .map(|(name, raw)| (name.clone(), expand(raw, &[&self.global_raw])))
            .collect();
        let default_block = self.extract_default_block();
        let hidden_templates: IndexMap<String, RawNode> = self
            .hidden_entries
            .iter()
            .map(|(name, entry)| (name.clone(), entry.value.clone()))
            .collect();

        Ok(WorkflowModel {
            stages: self.stages,
            global_variables,
            default_block,
            jobs,
            hidden_templates,
            warnings: self.warnings,
        })
    }

    fn classify_top_level(&mut self) {
        let entries = self
            .root
            .as_mapping()
            .expect("frontend guarantees a mapping root");
        for entry in entries {
            if RESERVED_TOP_LEVEL_KEYS.contains(&entry.key.as_str()) {
                continue;
            }
            if entry.key.starts_with('.') {
                self.hidden_entries.insert(entry.key.clone(), entry);
                continue;
            }
            if entry.value.is_mapping() {
                self.job_entries.insert(entry.key.clone(), entry);
            } else {
                self.warnings.push(format!(
                    "{}: top-level key `{}` is a {}, not a job definition; ignored",
                    entry.key_location,
                    entry.key,
                    entry.value.kind_name()
                ));
            }
        }
    }

    fn resolve_stages(&mut self) -> Vec<String> {
        let stages_node = self.root.get("stages");
        let types_node = self.root.get("types");
        if types_node.is_some() {
            if stages_node.is_some() {
                self.warnings.push(
                    "both `stages` and legacy `types` are defined; `stages` wins".to_string(),
                );
            } else {
                self.warnings
                    .push("legacy `types` is used to define stages; prefer `stages`".to_string());
            }
        }
        let node = stages_node.or(types_node);
        let mut user_stages: Vec<String> = Vec::new();
        match node {
            None => user_stages.extend(FALLBACK_STAGES.iter().map(|s| s.to_string())),
            Some(node) => match node.as_sequence() {
                Some(items) => {
                    for item in items {
                        match item.as_str() {
                            Some(stage) => {
                                if user_stages.iter().any(|s| s == stage) {
                                    self.warnings.push(format!(
                                        "{}: duplicate stage `{stage}` ignored",
                                        item.location
                                    ));
                                } else {
                                    user_stages.push(stage.to_string());
                                }
                            }
                            None => self
                                .warnings
                                .push(format!("{}: non-scalar stage entry ignored", item.location)),
                        }
                    }
                }
                None => {
                    self.warnings.push(format!(
                        "{}: `stages` must be a list; falling back to the default stages",
                        node.location
                    ));
                    user_stages.extend(FALLBACK_STAGES.iter().map(|s| s.to_string()));
                }
            },
        }
        // `.pre` and `.post` always exist, pinned to the ends regardless of
        // where (or whether) they were written.
        user_stages.retain(|s| s != ".pre" && s != ".post");
        let mut stages = Vec::with_capacity(user_stages.len() + 2);
        stages.push(".pre".to_string());
        stages.extend(user_stages);
        stages.push(".post".to_string());
        stages
    }

    /// Gathers defaults: the legacy top-level keys first, then the
    /// `default:` block, which wins on conflict.
    fn collect_defaults(&mut self) -> Vec<(String, RawNode)> {
        let mut defaults: Vec<(String, RawNode)> = Vec::new();
        for key in DEFAULT_KEYS {
            if let Some(node) = self.root.get(key) {
                defaults.push((key.to_string(), node.clone()));
            }
        }
        if let Some(block) = self.root.get("default") {
            match block.as_mapping() {
                Some(entries) => {
                    for entry in entries {
                        if !DEFAULT_KEYS.contains(&entry.key.as_str()) {
                            continue;
                        }
                        if let Some(existing) =
                            defaults.iter_mut().find(|(key, _)| *key == entry.key)
                        {
                            self.warnings.push(format!(
                                "{}: `{}` is set both top-level and under `default:`; the `default:` value wins",
                                entry.key_location, entry.key
                            ));
                            existing.1 = entry.value.clone();
                        } else {
                            defaults.push((entry.key.clone(), entry.value.clone()));
                        }
                    }
                }
                None => self.warnings.push(format!(
                    "{}: `default` must be a mapping; ignored",
                    block.location
                )),
            }
        }
        defaults
    }

    fn lookup_entry(&self, name: &str) -> Option<&'a MapEntry> {
        self.job_entries
            .get(name)
            .or_else(|| self.hidden_entries.get(name))
            .copied()
    }

    /// Returns `name`'s configuration with its `extends` chain folded in.
    /// `referer` is the job that asked for `name` (for error attribution);
    /// `depth` counts inheritance levels from the original job.
    fn merged_config(
        &mut self,
        name: &str,
        referer: Option<&str>,
        depth: usize,
    ) -> Result<RawNode, ResolveError> {
        if let Some(done) = self.merged.get(name) {
            return Ok(done.clone());
        }
        if depth > EXTENDS_DEPTH_LIMIT {
            return Err(ResolveError::ExtendsDepthExceeded {
                job: referer.unwrap_or(name).to_string(),
                limit: EXTENDS_DEPTH_LIMIT,
            });
        }
        let entry = self
            .lookup_entry(name)
            .ok_or_else(|| ResolveError::UnknownExtendsTarget {
                job: referer.unwrap_or(name).to_string(),
                target: name.to_string(),
            })?;
        if !entry.value.is_mapping() {
            return Err(ResolveError::UnknownExtendsTarget {
                job: referer.unwrap_or(name).to_string(),
                target: name.to_string(),
            });
        }

        let mut parent_names: Vec<String> = Vec::new();
        if let Some(extends) = entry.value.get("extends") {
            match extends.scalar_or_scalar_seq() {
                Some(targets) => parent_names.extend(targets.iter().map(|t| t.to_string())),
                None => self.warnings.push(format!(
                    "{}: `extends` must be a name or list of names; ignored",
                    extends.location
                )),
            }
        }

        // Parents merge left to right with later ones winning, then the
        // job's own keys win over all parents.
        let mut acc: Option<RawNode> = None;
        for parent_name in &parent_names {
            let parent = self.merged_config(parent_name, Some(name), depth + 1)?;
            acc = Some(match acc {
                None => parent,
                Some(base) => deep_merge(&base, &parent),
            });
        }
        let own = without_key(&entry.value, "extends");
        let result = match acc {
            None => own,
            Some(base) => deep_merge(&base, &own),
        };
        self.merged.insert(name.to_string(), result.clone());
        Ok(result)
    }

    /// Fills in default keys the job does not set itself. Each default key
    /// is all-or-nothing: a job with its own `cache:` keeps exactly that
    /// cache, no subkeys leak in from the default one.
    fn apply_defaults(&mut self, merged: RawNode) -> RawNode {
        let inherit = InheritPolicy::from_job(&merged, &mut self.warnings);
        let NodeValue::Mapping(mut entries) = merged.value else {
            unreachable!("merged job configurations are mappings");
        };
        for (key, default_node) in &self.defaults {
            if !inherit.takes_default(key) {
                continue;
            }
            if entries.iter().any(|entry| &entry.key == key) {
                continue;
            }
            entries.push(MapEntry {
                key: key.clone(),
                key_location: default_node.location.clone(),
                value: default_node.clone(),
            });
        }
        RawNode {
            value: NodeValue::Mapping(entries),
            location: merged.location,
        }
    }

    fn extract_job(&mut self, name: &str, merged: &RawNode) -> Result<JobConfig, ResolveError> {
        let location = self
            .job_entries
            .get(name)
            .map(|entry| entry.key_location.clone())
            .expect("extract_job is only called for known jobs");

        let inherit = InheritPolicy::from_job(merged, &mut Vec::new());
        let job_raw = merged.get("variables").map_or_else(IndexMap::new, |node| {
            raw_variable_map(node, &format!("`{name}` variables"), &mut self.warnings)
        });
        // Effective scope: inheritable globals first (document order), then
        // job-level definitions overriding them in place.
        let mut effective_raw: IndexMap<String, String> = self
            .global_raw
            .iter()
            .filter(|(var, _)| inherit.takes_variable(var))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (k, v) in &job_raw {
            effective_raw.insert(k.clone(), v.clone());
        }

        let stage = match merged.get("stage") {
            Some(node) => match node.as_str() {
                Some(s) => s.to_string(),
                None => {
                    self.warnings.push(format!(
                        "{}: non-scalar `stage` in job `{name}`; using `test`",
                        node.location
                    ));
                    "test".to_string()
                }
            },
            None => "test".to_string(),
        };
        if !self.stages.contains(&stage) {
            return Err(ResolveError::UnknownStage {
                job: name.to_string(),
                stage,
            });
        }

        let mut ctx = Extract {
            job: name,
            scope: &effective_raw,
            warnings: &mut self.warnings,
        };

        let needs = merged.get("needs").map(|node| ctx.needs(node));
        let dependencies = merged
            .get("dependencies")
            .map(|node| ctx.dependencies(node));
        let artifacts = merged.get("artifacts").and_then(|node| ctx.artifacts(node));
        let caches = merged
            .get("cache")
            .map_or_else(Vec::new, |node| ctx.caches(node));
        let image = merged
            .get("image")
            .and_then(|node| ctx.image(node, ImageOrigin::ImageClause));
        let services = merged
            .get("services")
            .map_or_else(Vec::new, |node| ctx.services(node));
        let before_script = merged
            .get("before_script")
            .map_or_else(Vec::new, |node| ctx.script(node, "before_script"));
        let script = merged
            .get("script")
            .map_or_else(Vec::new, |node| ctx.script(node, "script"));
        let after_script = merged
            .get("after_script")
            .map_or_else(Vec::new, |node| ctx.script(node, "after_script"));
        let matrix_instances = merged
            .get("parallel")
            .map_or_else(Vec::new, |node| ctx.matrix_instances(node));

        let variables: IndexMap<String, VariableValue> = effective_raw
            .iter()
            .map(|(var, raw)| (var.clone(), expand(raw, &[&effective_raw])))
            .collect();

        Ok(JobConfig {
            name: name.to_string(),
            stage,
            needs,
            dependencies,
            artifacts,
            caches,
            image,
            services,
            before_script,
            script,
            after_script,
            variables,
            matrix_instances,
            location,
        })
    }

    /// Cross-job checks that need the full job set: `needs` targets must
    /// exist (optional ones may not), and `dependencies` entries must name
    /// jobs that demonstrably run earlier.
    fn validate_references(
        &mut self,
        jobs: &mut IndexMap<String, JobConfig>,
    ) -> Result<(), ResolveError> {
        let stage_of: HashMap<String, usize> = jobs
            .values()
            .map(|job| {
                let index = self
                    .stages
                    .iter()
                    .position(|s| *s == job.stage)
                    .expect("job stages were validated during extraction");
                (job.name.clone(), index)
            })
            .collect();
        let names: Vec<String> = jobs.keys().cloned().collect();

        for name in &names {
            let job_stage = stage_of[name];
            let job = jobs.get_mut(name).expect("iterating existing names");

            if let Some(needs) = &mut job.needs {
                let mut kept: Vec<NeedRef> = Vec::new();
                for need in needs.drain(..) {
                    match stage_of.get(&need.job) {
                        Some(&target_stage) => {
                            if target_stage > job_stage {
                                self.warnings.push(format!(
                                    "job `{name}` needs `{}` from a later stage; \
                                     the edge is kept but the pipeline is unlikely to run",
                                    need.job
                                ));
                            }
                            kept.push(need);
                        }
                        None if need.optional => {
                            self.warnings.push(format!(
                                "job `{name}`: optional needs entry `{}` does not exist; skipped",
                                need.job
                            ));
                        }
                        None => {
                            return Err(ResolveError::NeedsUnknownJob {
                                job: name.clone(),
                                needs: need.job,
                            });
                        }
                    }
                }
                *needs = kept;
            }

            let need_names: Vec<String> = job
                .needs
                .iter()
                .flatten()
                .map(|need| need.job.clone())
                .collect();
            let has_needs = job.needs.is_some();
            if let Some(dependencies) = &mut job.dependencies {
                let mut kept: Vec<String> = Vec::new();
                for dep in dependencies.drain(..) {
                    let valid = match stage_of.get(&dep) {
                        None => {
                            self.warnings.push(format!(
                                "job `{name}`: dependencies entry `{dep}` does not exist; dropped"
                            ));
                            false
                        }
                        Some(&dep_stage) => {
                            if has_needs {
                                // With `needs`, artifacts can only come from
                                // needed jobs.
                                let ok = need_names.iter().any(|n| n == &dep);
                                if !ok {
                                    self.warnings.push(format!(
                                        "job `{name}`: dependencies entry `{dep}` is not in `needs`; dropped"
                                    ));
                                }
                                ok
                            } else {
                                let ok = dep_stage < job_stage;
                                if !ok {
                                    self.warnings.push(format!(
                                        "job `{name}`: dependencies entry `{dep}` does not run in an earlier stage; dropped"
                                    ));
                                }
                                ok
                            }
                        }
                    };
                    if valid {
                        kept.push(dep);
                    }
                }
                *dependencies = kept;
            }
        }
        Ok(())
    }

    fn extract_default_block(&mut self) -> DefaultBlock {
        let defaults = std::mem::take(&mut self.defaults);
        let scope = self.global_raw.clone();
        let mut ctx = Extract {
            job: "(default)",
            scope: &scope,
            warnings: &mut self.warnings,
        };
        let mut block = DefaultBlock::default();
        for (key, node) in &defaults {
            match key.as_str() {
                "image" => block.image = ctx.image(node, ImageOrigin::ImageClause),
                "services" => block.services = ctx.services(node),
                "cache" => block.caches = ctx.caches(node),
                "before_script" => block.before_script = ctx.script(node, "before_script"),
                "after_script" => block.after_script = ctx.script(node, "after_script"),
                _ => {}
            }
        }
        block
    }
}

/// Which inherited configuration a job opts into via `inherit:`.
struct InheritPolicy {
    default: InheritSelection,
    variables: InheritSelection,
}

enum InheritSelection {
    All,
    None,
    Only(Vec<String>),
}

impl InheritPolicy {
    fn from_job(merged: &RawNode, warnings: &mut Vec<String>) -> Self {
        let mut policy = InheritPolicy {
            default: InheritSelection::All,
            variables: InheritSelection::All,
        };
        let Some(node) = merged.get("inherit") else {
            return policy;
        };
        let Some(entries) = node.as_mapping() else {
            warnings.push(format!(
                "{}: `inherit` must be a mapping; ignored",
                node.location
            ));
            return policy;
        };
        for entry in entries {
            let selection = match (&entry.value.value, entry.value.as_bool()) {
                (_, Some(true)) => InheritSelection::All,
                (_, Some(false)) => InheritSelection::None,
                (NodeValue::Sequence(items), _) => InheritSelection::Only(
                    items
                        .iter()
                        .filter_map(|item| item.as_str().map(str::to_string))
                        .collect(),
                ),
                _ => {
                    warnings.push(format!(
                        "{}: `inherit:{}` must be a boolean or a list; ignored",
                        entry.key_location, entry.key
                    ));
                    continue;
                }
            };
            match entry.key.as_str() {
                "default" => policy.default = selection,
                "variables" => policy.variables = selection,
                _ => {}
            }
        }
        policy
    }

    fn takes_default(&self, key: &str) -> bool {
        match &self.default {
            InheritSelection::All => true,
            InheritSelection::None => false,
            InheritSelection::Only(keys) => keys.iter().any(|k| k == key),
        }
    }

    fn takes_variable(&self, name: &str) -> bool {
        match &self.variables {
            InheritSelection::All => true,
            InheritSelection::None => false,
            InheritSelection::Only(names) => names.iter().any(|n| n == name),
        }
    }
}

/// Deep merge for `extends`: mappings merge key-by-key recursively, any
/// other pairing is replaced by the overlay.
fn deep_merge(base: &RawNode, overlay: &RawNode) -> RawNode {
    match (&base.value, &overlay.value) {
        (NodeValue::Mapping(base_entries), NodeValue::Mapping(overlay_entries)) => {
            let mut merged = base_entries.clone();
            for entry in overlay_entries {
                match merged.iter_mut().find(|e| e.key == entry.key) {
                    Some(existing) => {
                        existing.value = deep_merge(&existing.value, &entry.value);
                        existing.key_location = entry.key_location.clone();
                    }
                    None => merged.push(entry.clone()),
                }
            }
            RawNode {
                value: NodeValue::Mapping(merged),
                location: overlay.location.clone(),
            }
        }
        _ => overlay.clone(),
    }
}

fn without_key(node: &RawNode, key: &str) -> RawNode {
    let NodeValue::Mapping(entries) = &node.value else {
        return node.clone();
    };
    RawNode {
        value: NodeValue::Mapping(
            entries
                .iter()
                .filter(|entry| entry.key != key)
                .cloned()
                .collect(),
        ),
        location: node.location.clone(),
    }
}

/// Reads a `variables:` mapping into raw name/value pairs. Values may be
/// scalars or mappings carrying a `value:` key (the long form with
/// description/options).
fn raw_variable_map(
    node: &RawNode,
    context: &str,
    warnings: &mut Vec<String>,
) -> IndexMap<String, String> {
    let mut map = IndexMap::new();
    let Some(entries) = node.as_mapping() else {
        warnings.push(format!(
            "{}: {context} must be a mapping; ignored",
            node.location
        ));
        return map;
    };
    for entry in entries {
        match &entry.value.value {
            NodeValue::Scalar { text, .. } => {
                map.insert(entry.key.clone(), text.clone());
            }
            NodeValue::Mapping(_) => match entry.value.get("value").and_then(|n| n.as_str()) {
                Some(value) => {
                    map.insert(entry.key.clone(), value.to_string());
                }
                None => warnings.push(format!(
                    "{}: variable `{}` uses the long form without a `value`; ignored",
                    entry.key_location, entry.key
                )),
            },
            NodeValue::Sequence(_) => warnings.push(format!(
                "{}: variable `{}` has a sequence value; ignored",
                entry.key_location, entry.key
            )),
        }
    }
    map
}

/// Clause extraction helpers sharing the job's variable scope and the
/// warning sink.
struct Extract<'a> {
    job: &'a str,
    scope: &'a IndexMap<String, String>,
    warnings: &'a mut Vec<String>,
}

impl Extract<'_> {
    fn expand(&self, text: &str) -> VariableValue {
        expand(text, &[self.scope])
    }

    fn needs(&mut self, node: &RawNode) -> Vec<NeedRef> {
        let mut needs = Vec::new();
        let items: Vec<&RawNode> = match &node.value {
            NodeValue::Sequence(items) => items.iter().collect(),
            // A bare scalar is accepted as a single entry.
            NodeValue::Scalar { .. } => vec![node],
            NodeValue::Mapping(_) => {
                self.warnings.push(format!(
                    "{}: `needs` of job `{}` must be a list; ignored",
                    node.location, self.job
                ));
                return needs;
            }
        };
        for item in items {
            match &item.value {
                NodeValue::Scalar { text, .. } => needs.push(NeedRef {
                    job: text.clone(),
                    artifacts_explicit: None,
                    optional: false,
                }),
                NodeValue::Mapping(_) => {
                    if item.get("pipeline").is_some() || item.get("project").is_some() {
                        self.warnings.push(format!(
                            "{}: cross-pipeline needs entry in job `{}` is not analyzed",
                            item.location, self.job
                        ));
                        continue;
                    }
                    let Some(job) = item.get("job").and_then(|n| n.as_str()) else {
                        self.warnings.push(format!(
                            "{}: needs entry without a `job` in `{}`; skipped",
                            item.location, self.job
                        ));
                        continue;
                    };
                    needs.push(NeedRef {
                        job: job.to_string(),
                        artifacts_explicit: item.get("artifacts").and_then(|n| n.as_bool()),
                        optional: item
                            .get("optional")
                            .and_then(|n| n.as_bool())
                            .unwrap_or(false),
                    });
                }
                NodeValue::Sequence(_) => self.warnings.push(format!(
                    "{}: malformed needs entry in `{}`; skipped",
                    item.location, self.job
                )),
            }
        }
        needs
    }

    fn dependencies(&mut self, node: &RawNode) -> Vec<String> {
        match node.scalar_or_scalar_seq() {
            Some(names) => names.into_iter().map(str::to_string).collect(),
            None => {
                self.warnings.push(format!(
                    "{}: `dependencies` of job `{}` must be a list of job names; treating as empty",
                    node.location, self.job
                ));
                Vec::new()
            }
        }
    }

    fn artifacts(&mut self, node: &RawNode) -> Option<ArtifactsSpec> {
        if node.is_null() {
            return None;
        }
        let Some(_) = node.as_mapping() else {
            self.warnings.push(format!(
                "{}: `artifacts` of job `{}` must be a mapping; ignored",
                node.location, self.job
            ));
            return None;
        };
        let mut paths = Vec::new();
        if let Some(paths_node) = node.get("paths") {
            match paths_node.scalar_or_scalar_seq() {
                Some(items) => paths.extend(items.into_iter().map(str::to_string)),
                None => self.warnings.push(format!(
                    "{}: malformed `artifacts:paths` in job `{}`; ignored",
                    paths_node.location, self.job
                )),
            }
        }
        let untracked = node
            .get("untracked")
            .and_then(|n| n.as_bool())
            .unwrap_or(false);
        let has_reports = node
            .get("reports")
            .and_then(|n| n.as_mapping())
            .is_some_and(|entries| !entries.is_empty());
        let expire_in = node
            .get("expire_in")
            .filter(|n| !n.is_null())
            .and_then(|n| n.as_str())
            .map(str::to_string);
        let spec = ArtifactsSpec {
            paths,
            untracked,
            has_reports,
            expire_in,
            location: node.location.clone(),
        };
        if !spec.archives_anything() {
            self.warnings.push(format!(
                "{}: `artifacts` of job `{}` archives nothing (no paths, reports, or untracked); ignored",
                node.location, self.job
            ));
            return None;
        }
        Some(spec)
    }

    fn caches(&mut self, node: &RawNode) -> Vec<CacheSpec> {
        if node.is_null() {
            return Vec::new();
        }
        let items: Vec<&RawNode> = match &node.value {
            NodeValue::Sequence(items) => items.iter().collect(),
            NodeValue::Mapping(_) => vec![node],
            NodeValue::Scalar { .. } => {
                self.warnings.push(format!(
                    "{}: `cache` of job `{}` must be a mapping or list; ignored",
                    node.location, self.job
                ));
                return Vec::new();
            }
        };
        if items.len() > MAX_CACHES_PER_JOB {
            self.warnings.push(format!(
                "{}: job `{}` declares {} cache entries; the platform honors at most {MAX_CACHES_PER_JOB}, extras ignored",
                node.location, self.job, items.len()
            ));
        }
        items
            .into_iter()
            .take(MAX_CACHES_PER_JOB)
            .filter_map(|item| self.one_cache(item))
            .collect()
    }

    fn one_cache(&mut self, node: &RawNode) -> Option<CacheSpec> {
        if node.is_null() {
            return None;
        }
        if node.as_mapping().is_none() {
            self.warnings.push(format!(
                "{}: cache entry of job `{}` must be a mapping; skipped",
                node.location, self.job
            ));
            return None;
        }
        let key = match node.get("key") {
            None => CacheKey {
                kind: CacheKeyKind::Literal(VariableValue::literal("default")),
                variables_used: Default::default(),
            },
            Some(key_node) => match &key_node.value {
                NodeValue::Scalar { text, .. } => CacheKey {
                    kind: CacheKeyKind::Literal(self.expand(text)),
                    variables_used: references_in(text),
                },
                NodeValue::Mapping(_) => {
                    let mut files: Vec<String> = key_node
                        .get("files")
                        .and_then(|n| n.scalar_or_scalar_seq())
                        .map(|items| items.into_iter().map(str::to_string).collect())
                        .unwrap_or_default();
                    if files.len() > MAX_KEY_FILES {
                        self.warnings.push(format!(
                            "{}: `cache:key:files` of job `{}` lists {} files; the platform allows {MAX_KEY_FILES}, extras ignored",
                            key_node.location, self.job, files.len()
                        ));
                        files.truncate(MAX_KEY_FILES);
                    }
                    let prefix_raw = key_node.get("prefix").and_then(|n| n.as_str());
                    let mut variables_used = prefix_raw.map(references_in).unwrap_or_default();
                    for file in &files {
                        variables_used.extend(references_in(file));
                    }
                    CacheKey {
                        kind: CacheKeyKind::Files {
                            files,
                            prefix: prefix_raw.map(|p| self.expand(p)),
                        },
                        variables_used,
                    }
                }
                NodeValue::Sequence(_) => {
                    self.warnings.push(format!(
                        "{}: malformed `cache:key` in job `{}`; entry skipped",
                        key_node.location, self.job
                    ));
                    return None;
                }
            },
        };
        let mut paths: Vec<VariableValue> = Vec::new();
        if let Some(paths_node) = node.get("paths") {
            match paths_node.scalar_or_scalar_seq() {
                Some(items) => paths.extend(items.into_iter().map(|p| self.expand(p))),
                None => self.warnings.push(format!(
                    "{}: malformed `cache:paths` in job `{}`; ignored",
                    paths_node.location, self.job
                )),
            }
        }
        let untracked = node
            .get("untracked")
            .and_then(|n| n.as_bool())
            .unwrap_or(false);
        if paths.is_empty() && !untracked {
            self.warnings.push(format!(
                "{}: cache entry of job `{}` has no paths and would store nothing; ignored",
                node.location, self.job
            ));
            return None;
        }
        let policy = match node.get("policy") {
            None => CachePolicy::PullPush,
            Some(policy_node) => {
                let text = policy_node.as_str().map(|t| self.expand(t));
                match text.as_ref().map(|v| v.expanded.as_str()) {
                    Some("pull") => CachePolicy::Pull,
                    Some("push") => CachePolicy::Push,
                    Some("pull-push") => CachePolicy::PullPush,
                    _ => {
                        self.warnings.push(format!(
                            "{}: unrecognized cache policy in job `{}`; assuming `pull-push`",
                            policy_node.location, self.job
                        ));
                        CachePolicy::PullPush
                    }
                }
            }
        };
        let mut fallback_keys: Vec<String> = node
            .get("fallback_keys")
            .and_then(|n| n.scalar_or_scalar_seq())
            .map(|items| items.into_iter().map(str::to_string).collect())
            .unwrap_or_default();
        if fallback_keys.len() > MAX_FALLBACK_KEYS {
            self.warnings.push(format!(
                "{}: job `{}` lists {} fallback keys; the platform honors at most {MAX_FALLBACK_KEYS}, extras ignored",
                node.location, self.job, fallback_keys.len()
            ));
            fallback_keys.truncate(MAX_FALLBACK_KEYS);
        }
        Some(CacheSpec {
            key,
            paths,
            untracked,
            policy,
            fallback_keys,
            location: node.location.clone(),
        })
    }

    fn image(&mut self, node: &RawNode, origin: ImageOrigin) -> Option<super::ImageRef> {
        let (raw, location) = match &node.value {
            NodeValue::Scalar { text, .. } => (text.as_str(), node.location.clone()),
            NodeValue::Mapping(_) => match node.get("name").map(|n| (n.as_str(), n)) {
                Some((Some(text), name_node)) => (text, name_node.location.clone()),
                _ => {
                    self.warnings.push(format!(
                        "{}: image of job `{}` lacks a scalar `name`; ignored",
                        node.location, self.job
                    ));
                    return None;
                }
            },
            NodeValue::Sequence(_) => {
                self.warnings.push(format!(
                    "{}: malformed image reference in job `{}`; ignored",
                    node.location, self.job
                ));
                return None;
            }
        };
        Some(parse_image(raw, &[self.scope], origin, location))
    }

    fn services(&mut self, node: &RawNode) -> Vec<super::ImageRef> {
        let Some(items) = node.as_sequence() else {
            self.warnings.push(format!(
                "{}: `services` of job `{}` must be a list; ignored",
                node.location, self.job
            ));
            return Vec::new();
        };
        items
            .iter()
            .filter_map(|item| self.image(item, ImageOrigin::ServicesClause))
            .collect()
    }

    /// Script clauses accept a scalar, a list, or a one-level nested list.
    fn script(&mut self, node: &RawNode, clause: &str) -> Vec<ScriptLine> {
        let mut lines = Vec::new();
        match &node.value {
            NodeValue::Scalar { text, .. } => lines.push(ScriptLine {
                text: text.clone(),
                location: node.location.clone(),
            }),
            NodeValue::Sequence(items) => {
                for item in items {
                    match &item.value {
                        NodeValue::Scalar { text, .. } => lines.push(ScriptLine {
                            text: text.clone(),
                            location: item.location.clone(),
                        }),
                        NodeValue::Sequence(inner) => {
                            for leaf in inner {
                                match leaf.as_str() {
                                    Some(text) => lines.push(ScriptLine {
                                        text: text.to_string(),
                                        location: leaf.location.clone(),
                                    }),
                                    None => self.warnings.push(format!(
                                        "{}: non-scalar `{clause}` entry in job `{}`; skipped",
                                        leaf.location, self.job
                                    )),
                                }
                            }
                        }
                        NodeValue::Mapping(_) => self.warnings.push(format!(
                            "{}: non-scalar `{clause}` entry in job `{}`; skipped",
                            item.location, self.job
                        )),
                    }
                }
            }
            NodeValue::Mapping(_) => self.warnings.push(format!(
                "{}: `{clause}` of job `{}` must be a string or list; ignored",
                node.location, self.job
            )),
        }
        lines
    }

    /// Expands `parallel:matrix` into concrete assignments: the cartesian
    /// product within each matrix entry, concatenated across entries.
    fn matrix_instances(&mut self, node: &RawNode) -> Vec<IndexMap<String, String>> {
        let matrix = match &node.value {
            NodeValue::Mapping(_) => match node.get("matrix") {
                Some(matrix) => matrix,
                None => return Vec::new(),
            },
            NodeValue::Scalar { .. } => {
                // Numeric `parallel: N` duplicates the job without changing
                // its configuration; instances are not modeled, which also
                // means cache contention among them is not checked.
                self.warnings.push(format!(
                    "job `{}` uses numeric `parallel`; its instances are not analyzed individually",
                    self.job
                ));
                return Vec::new();
            }
            NodeValue::Sequence(_) => {
                self.warnings.push(format!(
                    "{}: malformed `parallel` in job `{}`; ignored",
                    node.location, self.job
                ));
                return Vec::new();
            }
        };
        let Some(items) = matrix.as_sequence() else {
            self.warnings.push(format!(
                "{}: `parallel:matrix` of job `{}` must be a list; ignored",
                matrix.location, self.job
            ));
            return Vec::new();
        };
        let mut instances: Vec<IndexMap<String, String>> = Vec::new();
        for item in items {
            let Some(entries) = item.as_mapping() else {
                self.warnings.push(format!(
                    "{}: matrix entry of job `{}` must be a mapping; skipped",
                    item.location, self.job
                ));
                continue;
            };
            let mut product: Vec<IndexMap<String, String>> = vec![IndexMap::new()];
            for entry in entries {
                let Some(values) = entry.value.scalar_or_scalar_seq() else {
                    self.warnings.push(format!(
                        "{}: matrix variable `{}` of job `{}` has a non-scalar value; skipped",
                        entry.key_location, entry.key, self.job
                    ));
                    continue;
                };
                let mut next = Vec::with_capacity(product.len() * values.len());
                for assignment in &product {
                    for value in &values {
                        let mut extended = assignment.clone();
                        extended.insert(entry.key.clone(), value.to_string());
                        next.push(extended);
                    }
                }
                product = next;
            }
            instances.extend(product.into_iter().filter(|a| !a.is_empty()));
        }
        if instances.len() > MAX_MATRIX_INSTANCES {
            self.warnings.push(format!(
                "job `{}` expands to {} matrix instances; only the first {MAX_MATRIX_INSTANCES} are analyzed",
                self.job,
                instances.len()
            ));
            instances.truncate(MAX_MATRIX_INSTANCES);
        }
        instances
    }
}

/// Re-expands every variable-bearing field of `job` under `scopes` (searched
/// first match wins). Matrix expansion uses this to apply instance
/// assignments on top of the job's own scope.
pub(crate) fn reexpand_job(job: &mut JobConfig, scopes: &[&IndexMap<String, String>]) {
    job.variables = job
        .variables
        .iter()
        .map(|(name, value)| (name.clone(), expand(&value.raw, scopes)))
        .collect();
    for cache in &mut job.caches {
        match &mut cache.key.kind {
            CacheKeyKind::Literal(value) => *value = expand(&value.raw, scopes),
            CacheKeyKind::Files { prefix, .. } => {
                if let Some(prefix) = prefix {
                    *prefix = expand(&prefix.raw, scopes);
                }
            }
        }
        for path in &mut cache.paths {
            *path = expand(&path.raw, scopes);
        }
    }
    if let Some(image) = &mut job.image {
        *image = parse_image(&image.raw, scopes, image.origin, image.location.clone());
    }
    for service in &mut job.services {
        *service = parse_image(
            &service.raw,
            scopes,
            service.origin,
            service.location.clone(),
        );
    }
}
