//! Shared test support: a seeded random-workflow generator whose outputs
//! carry hand-annotated ground truth, naive reference detectors computed
//! from those annotations, and projection helpers for resolver round-trip
//! checks.
//!
//! The reference detectors never touch the production parser, resolver, or
//! classifier. Every script line, image reference, cache key, and cache
//! path a generated workflow can contain comes from a fixed pool whose
//! relevant properties (what it installs, whether it points at Docker Hub,
//! whether it covers a package manager's cache directory) were worked out
//! by hand and frozen here. A bug shared between production code and the
//! reference would have to be a bug in these annotations, not in code.

#![allow(dead_code)] // each integration-test binary uses a different subset

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use cachelint_core::detect::{
    analyze_scripts, run_detectors, DetectionOutcome, RepoContext, SmellId,
};
use cachelint_core::frontend::{parse_str, RawDocument};
use cachelint_core::graph::{build_graph, ExecutionGraph};
use cachelint_core::model::{resolve, CacheKeyKind, WorkflowModel};

// ---------------------------------------------------------------------------
// Annotated pools
// ---------------------------------------------------------------------------

/// What a pool script line does, as far as the detectors care.
#[derive(Clone, Copy, Debug)]
pub enum LineFact {
    /// Installs Python packages with pip.
    Pip,
    /// Installs packages with conda.
    Conda,
    /// Installs Python library packages via the system package manager.
    AptPython,
    /// Builds a container image.
    Build {
        cache_from: bool,
        tag: Option<&'static str>,
    },
    /// `docker buildx bake`: builds happen, but caching lives in the bake file.
    Bake,
    /// Pulls a container image. `hub` records whether the reference points
    /// at Docker Hub (no registry host, or an explicit Docker Hub host).
    Pull { image: &'static str, hub: bool },
    /// Pushes an image, marking it as built by this workflow.
    Push { image: &'static str },
}

pub struct PoolLine {
    pub text: &'static str,
    pub facts: &'static [LineFact],
}

pub const SCRIPT_POOL: &[PoolLine] = &[
    PoolLine {
        text: "make build",
        facts: &[],
    },
    PoolLine {
        text: "echo done",
        facts: &[],
    },
    PoolLine {
        text: "cargo test --workspace",
        facts: &[],
    },
    PoolLine {
        text: "pip install -r requirements.txt",
        facts: &[LineFact::Pip],
    },
    PoolLine {
        text: "python3 -m pip install tox",
        facts: &[LineFact::Pip],
    },
    PoolLine {
        text: "conda install -y numpy",
        facts: &[LineFact::Conda],
    },
    PoolLine {
        text: "apt-get install -y python3-numpy",
        facts: &[LineFact::AptPython],
    },
    // Toolchain packages only: not a Python library installation.
    PoolLine {
        text: "apt-get install -y curl python3-dev",
        facts: &[],
    },
    PoolLine {
        text: "docker build -t app/img .",
        facts: &[LineFact::Build {
            cache_from: false,
            tag: Some("app/img"),
        }],
    },
    PoolLine {
        text: "docker build --cache-from app/img -t app/img .",
        facts: &[LineFact::Build {
            cache_from: true,
            tag: Some("app/img"),
        }],
    },
    PoolLine {
        text: "docker buildx bake ci",
        facts: &[LineFact::Bake],
    },
    PoolLine {
        text: "docker pull redis:7",
        facts: &[LineFact::Pull {
            image: "redis:7",
            hub: true,
        }],
    },
    PoolLine {
        text: "docker pull registry.example.com/tools:1",
        facts: &[LineFact::Pull {
            image: "registry.example.com/tools:1",
            hub: false,
        }],
    },
    // Docker Hub shaped, but excluded whenever some job builds/pushes it.
    PoolLine {
        text: "docker pull app/img",
        facts: &[LineFact::Pull {
            image: "app/img",
            hub: true,
        }],
    },
    PoolLine {
        text: "docker push app/img",
        facts: &[LineFact::Push { image: "app/img" }],
    },
];

pub struct ImageSpec {
    pub text: &'static str,
    /// Whether the reference is a direct Docker Hub pull: no registry host
    /// or a Docker Hub host, not proxied, not behind an unresolvable or
    /// registry-bearing variable.
    pub hub: bool,
}

pub const IMAGE_POOL: &[ImageSpec] = &[
    ImageSpec {
        text: "gradle:8",
        hub: true,
    },
    ImageSpec {
        text: "redis:7",
        hub: true,
    },
    ImageSpec {
        text: "docker.io/library/postgres:16",
        hub: true,
    },
    ImageSpec {
        text: "registry.example.com/base:1",
        hub: false,
    },
    ImageSpec {
        text: "${CI_DEPENDENCY_PROXY_GROUP_IMAGE_PREFIX}/node:20",
        hub: false,
    },
    ImageSpec {
        text: "$CI_REGISTRY_IMAGE/tooling:latest",
        hub: false,
    },
    // Undefined variable: skipped with a warning, never reported.
    ImageSpec {
        text: "$MYSTERY_IMAGE",
        hub: false,
    },
];

pub struct PathSpec {
    pub text: &'static str,
    pub covers_pip: bool,
    pub covers_conda: bool,
    pub covers_apt: bool,
}

/// Cache paths with hand-derived coverage. `.cache/` is an ancestor of the
/// conventional pip (`.cache/pip`) and apt (`.cache/apt`) locations but not
/// of any conda one.
pub const PATH_POOL: &[PathSpec] = &[
    PathSpec {
        text: ".cache/pip/",
        covers_pip: true,
        covers_conda: false,
        covers_apt: false,
    },
    PathSpec {
        text: ".cache/",
        covers_pip: true,
        covers_conda: false,
        covers_apt: true,
    },
    PathSpec {
        text: "pip-cache/",
        covers_pip: true,
        covers_conda: false,
        covers_apt: false,
    },
    PathSpec {
        text: ".venv/",
        covers_pip: true,
        covers_conda: false,
        covers_apt: false,
    },
    PathSpec {
        text: ".conda/pkgs/",
        covers_pip: false,
        covers_conda: true,
        covers_apt: false,
    },
    PathSpec {
        text: "/var/cache/apt/archives/",
        covers_pip: false,
        covers_conda: false,
        covers_apt: true,
    },
    PathSpec {
        text: "target/",
        covers_pip: false,
        covers_conda: false,
        covers_apt: false,
    },
    PathSpec {
        text: "node_modules/",
        covers_pip: false,
        covers_conda: false,
        covers_apt: false,
    },
    PathSpec {
        text: "vendor/bundle/",
        covers_pip: false,
        covers_conda: false,
        covers_apt: false,
    },
];

pub struct KeySpec {
    /// `{job}` is replaced with the job name, making the key a per-job
    /// literal that can never collide.
    pub text: &'static str,
    /// Keys derived from job-unique variables cannot collide across jobs.
    pub job_unique: bool,
}

pub const KEY_POOL: &[KeySpec] = &[
    KeySpec {
        text: "shared-deps",
        job_unique: false,
    },
    KeySpec {
        text: "deps-$CI_COMMIT_REF_SLUG",
        job_unique: false,
    },
    KeySpec {
        text: "cache-$CI_JOB_NAME",
        job_unique: true,
    },
    KeySpec {
        text: "build-$CI_JOB_ID",
        job_unique: true,
    },
    KeySpec {
        text: "{job}-deps",
        job_unique: false,
    },
];

pub const STAGES: [&str; 4] = ["setup", "build", "test", "deploy"];

// ---------------------------------------------------------------------------
// Random workflows
// ---------------------------------------------------------------------------

pub struct SynthCache {
    pub key: String,
    pub key_unique: bool,
    pub paths: Vec<&'static PathSpec>,
    /// `None` emits no policy line (the platform default is pull-push).
    pub policy: Option<&'static str>,
    pub has_fallback: bool,
}

pub struct SynthNeed {
    pub job: String,
    /// `Some(b)` emits an explicit `artifacts: b` on the needs entry.
    pub artifacts: Option<bool>,
}

pub struct SynthJob {
    pub name: String,
    pub stage_index: usize,
    pub needs: Option<Vec<SynthNeed>>,
    pub dependencies: Option<Vec<String>>,
    pub has_artifacts: bool,
    pub artifacts_expire: bool,
    pub caches: Vec<SynthCache>,
    pub image: Option<&'static ImageSpec>,
    pub script: Vec<&'static PoolLine>,
    pub fallback_variable: bool,
}

pub struct SynthWorkflow {
    pub global_image: Option<&'static ImageSpec>,
    pub global_fallback_variable: bool,
    pub jobs: Vec<SynthJob>,
    pub group: bool,
}

pub fn generate(rng: &mut ChaCha8Rng) -> SynthWorkflow {
    let job_count = rng.random_range(1..=5);
    let mut jobs: Vec<SynthJob> = Vec::new();
    for i in 0..job_count {
        let name = format!("job{i}");
        let stage_index = rng.random_range(0..STAGES.len());
        // Needs may only point at same-or-earlier stages: together with the
        // stage waits of needs-free jobs, anything else would deadlock (and
        // the platform rejects it).
        let needs = if !jobs.is_empty() && rng.random_bool(0.4) {
            let mut list = Vec::new();
            for prev in &jobs {
                if prev.stage_index <= stage_index && rng.random_bool(0.4) {
                    let artifacts = match rng.random_range(0..4) {
                        0 => Some(true),
                        1 => Some(false),
                        _ => None,
                    };
                    list.push(SynthNeed {
                        job: prev.name.clone(),
                        artifacts,
                    });
                }
            }
            Some(list)
        } else if rng.random_bool(0.1) {
            Some(Vec::new())
        } else {
            None
        };
        let producer_pool: Vec<String> = match &needs {
            Some(list) => list.iter().map(|n| n.job.clone()).collect(),
            None => jobs
                .iter()
                .filter(|j| j.stage_index < stage_index)
                .map(|j| j.name.clone())
                .collect(),
        };
        let dependencies = rng.random_bool(0.3).then(|| {
            producer_pool
                .into_iter()
                .filter(|_| rng.random_bool(0.5))
                .collect()
        });
        let caches = (0..rng.random_range(0..=2))
            .map(|_| {
                let spec = KEY_POOL.choose(rng).unwrap();
                SynthCache {
                    key: spec.text.replace("{job}", &name),
                    key_unique: spec.job_unique,
                    paths: (0..rng.random_range(1..=2))
                        .map(|_| PATH_POOL.choose(rng).unwrap())
                        .collect(),
                    policy: *[None, Some("pull"), Some("push"), Some("pull-push")]
                        .choose(rng)
                        .unwrap(),
                    has_fallback: rng.random_bool(0.5),
                }
            })
            .collect();
        jobs.push(SynthJob {
            name,
            stage_index,
            needs,
            dependencies,
            has_artifacts: rng.random_bool(0.5),
            artifacts_expire: rng.random_bool(0.5),
            caches,
            image: rng
                .random_bool(0.4)
                .then(|| IMAGE_POOL.choose(rng).unwrap()),
            script: (0..rng.random_range(1..=4))
                .map(|_| SCRIPT_POOL.choose(rng).unwrap())
                .collect(),
            fallback_variable: rng.random_bool(0.1),
        });
    }
    SynthWorkflow {
        global_image: rng
            .random_bool(0.3)
            .then(|| IMAGE_POOL.choose(rng).unwrap()),
        global_fallback_variable: rng.random_bool(0.15),
        jobs,
        group: rng.random_bool(0.7),
    }
}

pub fn emit_workflow(w: &SynthWorkflow) -> String {
    let mut y = String::new();
    let _ = writeln!(y, "stages: [{}]", STAGES.join(", "));
    if let Some(image) = w.global_image {
        let _ = writeln!(y, "image: {}", image.text);
    }
    if w.global_fallback_variable {
        let _ = writeln!(y, "variables:");
        let _ = writeln!(y, "  CACHE_FALLBACK_KEY: fallback-main");
    }
    for job in &w.jobs {
        let _ = writeln!(y);
        let _ = writeln!(y, "{}:", job.name);
        let _ = writeln!(y, "  stage: {}", STAGES[job.stage_index]);
        if let Some(image) = job.image {
            let _ = writeln!(y, "  image: {}", image.text);
        }
        match &job.needs {
            Some(list) if list.is_empty() => {
                let _ = writeln!(y, "  needs: []");
            }
            Some(list) => {
                let _ = writeln!(y, "  needs:");
                for need in list {
                    match need.artifacts {
                        None => {
                            let _ = writeln!(y, "    - {}", need.job);
                        }
                        Some(flag) => {
                            let _ = writeln!(y, "    - job: {}", need.job);
                            let _ = writeln!(y, "      artifacts: {flag}");
                        }
                    }
                }
            }
            None => {}
        }
        if let Some(deps) = &job.dependencies {
            let _ = writeln!(y, "  dependencies: [{}]", deps.join(", "));
        }
        if job.fallback_variable {
            let _ = writeln!(y, "  variables:");
            let _ = writeln!(y, "    CACHE_FALLBACK_KEY: fallback-{}", job.name);
        }
        if job.has_artifacts {
            let _ = writeln!(y, "  artifacts:");
            let _ = writeln!(y, "    paths:");
            let _ = writeln!(y, "      - dist/");
            if job.artifacts_expire {
                let _ = writeln!(y, "    expire_in: 1 week");
            }
        }
        if !job.caches.is_empty() {
            let _ = writeln!(y, "  cache:");
            for cache in &job.caches {
                let _ = writeln!(y, "    - key: {}", cache.key);
                let _ = writeln!(y, "      paths:");
                for path in &cache.paths {
                    let _ = writeln!(y, "        - {}", path.text);
                }
                if let Some(policy) = cache.policy {
                    let _ = writeln!(y, "      policy: {policy}");
                }
                if cache.has_fallback {
                    let _ = writeln!(y, "      fallback_keys: [fallback-{}]", job.name);
                }
            }
        }
        let _ = writeln!(y, "  script:");
        for line in &job.script {
            let _ = writeln!(y, "    - {}", line.text);
        }
    }
    y
}

// ---------------------------------------------------------------------------
// Naive reference detectors over the annotated ground truth
// ---------------------------------------------------------------------------

/// `(smell, jobs)` pairs: the comparison currency between production
/// findings and the reference. Pair findings keep producer-then-consumer
/// order; group findings sort their jobs by name, as the detectors do.
pub type FindingSet = BTreeSet<(SmellId, Vec<String>)>;

pub fn finding_pairs(outcome: &DetectionOutcome) -> FindingSet {
    outcome
        .findings
        .iter()
        .map(|f| (f.smell, f.jobs.clone()))
        .collect()
}

fn facts(job: &SynthJob) -> impl Iterator<Item = &'static LineFact> + '_ {
    job.script.iter().flat_map(|line| line.facts.iter())
}

pub fn reference_findings(w: &SynthWorkflow) -> FindingSet {
    let mut out = FindingSet::new();

    // Artifacts without a retention period.
    for job in &w.jobs {
        if job.has_artifacts && !job.artifacts_expire {
            out.insert((SmellId::Sm1, vec![job.name.clone()]));
        }
    }

    // Implicit artifact transfer: producer with artifacts upstream of a
    // consumer that neither declares `dependencies` nor pins the transfer
    // on the needs entry.
    for job in &w.jobs {
        if job.dependencies.is_some() {
            continue;
        }
        let upstream_names: Vec<&str> = match &job.needs {
            Some(list) => list.iter().map(|n| n.job.as_str()).collect(),
            None => w
                .jobs
                .iter()
                .filter(|j| j.stage_index < job.stage_index)
                .map(|j| j.name.as_str())
                .collect(),
        };
        for producer in upstream_names {
            let up = w.jobs.iter().find(|j| j.name == producer).unwrap();
            if !up.has_artifacts {
                continue;
            }
            let pinned = job.needs.as_ref().is_some_and(|list| {
                list.iter()
                    .any(|n| n.job == producer && n.artifacts.is_some())
            });
            if !pinned {
                out.insert((SmellId::Sm2, vec![producer.to_string(), job.name.clone()]));
            }
        }
    }

    // Package installations without a matching cache path.
    for job in &w.jobs {
        let used: Vec<fn(&PathSpec) -> bool> = facts(job)
            .filter_map(|fact| match fact {
                LineFact::Pip => Some((|p: &PathSpec| p.covers_pip) as fn(&PathSpec) -> bool),
                LineFact::Conda => Some(|p: &PathSpec| p.covers_conda),
                LineFact::AptPython => Some(|p: &PathSpec| p.covers_apt),
                _ => None,
            })
            .collect();
        let covered = |covers: &fn(&PathSpec) -> bool| {
            job.caches
                .iter()
                .flat_map(|c| c.paths.iter())
                .any(|p| covers(p))
        };
        if used.iter().any(|covers| !covered(covers)) {
            out.insert((SmellId::Sm3, vec![job.name.clone()]));
        }
    }

    // Caches without fallback keys.
    for job in &w.jobs {
        if job.caches.is_empty() || w.global_fallback_variable || job.fallback_variable {
            continue;
        }
        if job.caches.iter().any(|c| !c.has_fallback) {
            out.insert((SmellId::Sm4, vec![job.name.clone()]));
        }
    }

    // Shared cache keys uploaded by several jobs.
    let mut pushers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for job in &w.jobs {
        for cache in &job.caches {
            let uploads = matches!(cache.policy, None | Some("push") | Some("pull-push"));
            if uploads && !cache.key_unique {
                pushers.entry(&cache.key).or_default().insert(&job.name);
            }
        }
    }
    for jobs in pushers.values() {
        if jobs.len() >= 2 {
            out.insert((SmellId::Sm7, jobs.iter().map(|j| j.to_string()).collect()));
        }
    }

    // Direct Docker Hub pulls in group repositories, self-built images
    // excluded.
    if w.group {
        let mut built: BTreeSet<&str> = BTreeSet::new();
        for job in &w.jobs {
            for fact in facts(job) {
                match fact {
                    LineFact::Build { tag: Some(tag), .. } => {
                        built.insert(tag);
                    }
                    LineFact::Push { image } => {
                        built.insert(image);
                    }
                    _ => {}
                }
            }
        }
        let mut hub_pulls: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for job in &w.jobs {
            let mut candidates: Vec<(&str, bool)> = Vec::new();
            if let Some(image) = job.image.or(w.global_image) {
                candidates.push((image.text, image.hub));
            }
            for fact in facts(job) {
                if let LineFact::Pull { image, hub } = fact {
                    candidates.push((image, *hub));
                }
            }
            for (text, hub) in candidates {
                if hub && !built.contains(text) {
                    hub_pulls.entry(text).or_default().insert(&job.name);
                }
            }
        }
        for jobs in hub_pulls.values() {
            out.insert((SmellId::Sm9, jobs.iter().map(|j| j.to_string()).collect()));
        }
    }

    // Image builds without `--cache-from`.
    for job in &w.jobs {
        let uncached = facts(job).any(|fact| {
            matches!(
                fact,
                LineFact::Build {
                    cache_from: false,
                    ..
                }
            )
        });
        if uncached {
            out.insert((SmellId::Sm10, vec![job.name.clone()]));
        }
    }

    out
}

// ---------------------------------------------------------------------------
// Production pipeline over in-memory YAML
// ---------------------------------------------------------------------------

pub struct Analyzed {
    pub model: WorkflowModel,
    pub graph: ExecutionGraph,
    pub outcome: DetectionOutcome,
}

pub fn analyze_str(yaml: &str, group: Option<bool>) -> Analyzed {
    let model = resolve_str(yaml);
    let graph = build_graph(&model).expect("graph builds");
    let scripts = analyze_scripts(&model);
    let ctx = RepoContext {
        repo_id: "synthetic".to_string(),
        is_group_repository: group,
    };
    let outcome = run_detectors(&model, &graph, &scripts, &ctx);
    Analyzed {
        model,
        graph,
        outcome,
    }
}

pub fn resolve_str(yaml: &str) -> WorkflowModel {
    let parsed = parse_str(yaml, "synthetic.yml").expect("yaml parses");
    let document = RawDocument {
        root: parsed.root,
        warnings: Vec::new(),
    };
    resolve(&document).expect("workflow resolves")
}

// ---------------------------------------------------------------------------
// Graph reference: the stage-product construction
// ---------------------------------------------------------------------------

/// Checks every job's upstream set against the first-principles rule:
/// a `needs` clause pins the set exactly; without one the job waits on
/// every job of every earlier stage.
pub fn check_graph_reference(model: &WorkflowModel, graph: &ExecutionGraph) -> Result<(), String> {
    for job in model.jobs.values() {
        let actual: BTreeSet<&str> = graph.upstreams(&job.name).map(|(up, _)| up).collect();
        let expected: BTreeSet<&str> = match &job.needs {
            Some(needs) => needs.iter().map(|n| n.job.as_str()).collect(),
            None => {
                let own = model
                    .stage_index(&job.stage)
                    .ok_or_else(|| format!("job `{}` has unknown stage", job.name))?;
                model
                    .jobs
                    .values()
                    .filter(|j| model.stage_index(&j.stage).unwrap_or(usize::MAX) < own)
                    .map(|j| j.name.as_str())
                    .collect()
            }
        };
        if actual != expected {
            return Err(format!(
                "job `{}`: graph upstreams {actual:?} != stage-product reference {expected:?}",
                job.name
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Resolver round-trip: emit a resolved model as explicit YAML
// ---------------------------------------------------------------------------

/// Order-stable projection of everything detection consumes from a model.
/// Source locations are excluded on purpose: re-emitting moves every node.
pub fn project_model(model: &WorkflowModel) -> serde_json::Value {
    let jobs: Vec<serde_json::Value> = model
        .jobs
        .values()
        .map(|job| {
            serde_json::json!({
                "name": job.name,
                "stage": job.stage,
                "needs": job.needs.as_ref().map(|needs| needs
                    .iter()
                    .map(|n| serde_json::json!({
                        "job": n.job,
                        "artifacts": n.artifacts_explicit,
                        "optional": n.optional,
                    }))
                    .collect::<Vec<_>>()),
                "dependencies": job.dependencies,
                "artifacts": job.artifacts.as_ref().map(|a| serde_json::json!({
                    "paths": a.paths,
                    "untracked": a.untracked,
                    "reports": a.has_reports,
                    "expire_in": a.expire_in,
                })),
                "caches": job.caches.iter().map(|c| serde_json::json!({
                    "key": c.key.canonical(),
                    "paths": c.paths.iter().map(|p| p.expanded.clone()).collect::<Vec<_>>(),
                    "untracked": c.untracked,
                    "policy": c.policy.as_str(),
                    "fallback_keys": c.fallback_keys,
                })).collect::<Vec<_>>(),
                "image": job.image.as_ref().map(|i| i.expanded.clone()),
                "services": job.services.iter().map(|s| s.expanded.clone()).collect::<Vec<_>>(),
                "script": job.all_script_lines().map(|(l, _)| l.text.clone()).collect::<Vec<_>>(),
                "variables": job.variables.iter()
                    .map(|(k, v)| (k.clone(), v.expanded.clone()))
                    .collect::<BTreeMap<_, _>>(),
            })
        })
        .collect();
    serde_json::json!({ "stages": model.stages, "jobs": jobs })
}

/// Writes a resolved model back out as fully explicit YAML, so resolving
/// the result must be a fixpoint. Handles the shapes resolved models can
/// take (matrix-free jobs, single-line script entries, scalars that are
/// safe as plain or single-quoted YAML) — the round-trip corpus and the
/// golden fixtures all satisfy these.
pub fn emit_resolved(model: &WorkflowModel) -> String {
    let mut y = String::new();
    let stages: Vec<String> = model.stages.iter().map(|s| quote(s)).collect();
    let _ = writeln!(y, "stages: [{}]", stages.join(", "));
    for job in model.jobs.values() {
        assert!(
            job.matrix_instances.is_empty(),
            "round-trip emitter does not reconstruct matrix clauses"
        );
        let _ = writeln!(y);
        let _ = writeln!(y, "{}:", quote(&job.name));
        let _ = writeln!(y, "  stage: {}", quote(&job.stage));
        match &job.needs {
            Some(needs) if needs.is_empty() => {
                let _ = writeln!(y, "  needs: []");
            }
            Some(needs) => {
                let _ = writeln!(y, "  needs:");
                for need in needs {
                    if need.artifacts_explicit.is_none() && !need.optional {
                        let _ = writeln!(y, "    - {}", quote(&need.job));
                        continue;
                    }
                    let _ = writeln!(y, "    - job: {}", quote(&need.job));
                    if let Some(flag) = need.artifacts_explicit {
                        let _ = writeln!(y, "      artifacts: {flag}");
                    }
                    if need.optional {
                        let _ = writeln!(y, "      optional: true");
                    }
                }
            }
            None => {}
        }
        if let Some(deps) = &job.dependencies {
            let deps: Vec<String> = deps.iter().map(|d| quote(d)).collect();
            let _ = writeln!(y, "  dependencies: [{}]", deps.join(", "));
        }
        if !job.variables.is_empty() {
            let _ = writeln!(y, "  variables:");
            for (name, value) in &job.variables {
                let _ = writeln!(y, "    {}: {}", name, quote(&value.raw));
            }
        }
        if let Some(artifacts) = &job.artifacts {
            let _ = writeln!(y, "  artifacts:");
            if !artifacts.paths.is_empty() {
                let _ = writeln!(y, "    paths:");
                for path in &artifacts.paths {
                    let _ = writeln!(y, "      - {}", quote(path));
                }
            }
            if artifacts.untracked {
                let _ = writeln!(y, "    untracked: true");
            }
            if artifacts.has_reports {
                let _ = writeln!(y, "    reports:");
                let _ = writeln!(y, "      junit: report.xml");
            }
            if let Some(expire) = &artifacts.expire_in {
                let _ = writeln!(y, "    expire_in: {}", quote(expire));
            }
        }
        if !job.caches.is_empty() {
            let _ = writeln!(y, "  cache:");
            for cache in &job.caches {
                match &cache.key.kind {
                    CacheKeyKind::Literal(value) => {
                        let _ = writeln!(y, "    - key: {}", quote(&value.raw));
                    }
                    CacheKeyKind::Files { files, prefix } => {
                        let _ = writeln!(y, "    - key:");
                        let _ = writeln!(y, "        files:");
                        for file in files {
                            let _ = writeln!(y, "          - {}", quote(file));
                        }
                        if let Some(prefix) = prefix {
                            let _ = writeln!(y, "        prefix: {}", quote(&prefix.raw));
                        }
                    }
                }
                if !cache.paths.is_empty() {
                    let _ = writeln!(y, "      paths:");
                    for path in &cache.paths {
                        let _ = writeln!(y, "        - {}", quote(&path.raw));
                    }
                }
                if cache.untracked {
                    let _ = writeln!(y, "      untracked: true");
                }
                let _ = writeln!(y, "      policy: {}", cache.policy.as_str());
                if !cache.fallback_keys.is_empty() {
                    let keys: Vec<String> = cache.fallback_keys.iter().map(|k| quote(k)).collect();
                    let _ = writeln!(y, "      fallback_keys: [{}]", keys.join(", "));
                }
            }
        }
        if let Some(image) = &job.image {
            let _ = writeln!(y, "  image: {}", quote(&image.raw));
        }
        if !job.services.is_empty() {
            let _ = writeln!(y, "  services:");
            for service in &job.services {
                let _ = writeln!(y, "    - {}", quote(&service.raw));
            }
        }
        for (label, lines) in [
            ("before_script", &job.before_script),
            ("script", &job.script),
            ("after_script", &job.after_script),
        ] {
            if lines.is_empty() {
                continue;
            }
            let _ = writeln!(y, "  {label}:");
            for line in lines {
                assert!(
                    !line.text.contains('\n'),
                    "round-trip emitter handles single-line script entries only"
                );
                let _ = writeln!(y, "    - {}", quote(&line.text));
            }
        }
    }
    y
}

// ---------------------------------------------------------------------------
// Deterministic large workflow for throughput checks
// ---------------------------------------------------------------------------

/// A workflow that is big in every dimension that costs time: `job_count`
/// jobs over six stages, an `extends` chain `extends_depth` templates deep
/// with a variable chain the same depth, matrix jobs, needs edges, and
/// enough script lines (plus padding) to reach `min_lines` lines of YAML.
pub fn big_workflow(job_count: usize, extends_depth: usize, min_lines: usize) -> String {
    assert!(extends_depth >= 1);
    let mut y = String::new();
    let _ = writeln!(y, "stages: [s0, s1, s2, s3, s4, s5]");
    let _ = writeln!(y);
    let _ = writeln!(y, ".tpl0:");
    let _ = writeln!(y, "  image: registry.example.com/ci-base:1");
    let _ = writeln!(y, "  variables:");
    let _ = writeln!(y, "    LEVEL0: base");
    let _ = writeln!(y, "  cache:");
    let _ = writeln!(y, "    key: warm-$CI_COMMIT_REF_SLUG");
    let _ = writeln!(y, "    paths:");
    let _ = writeln!(y, "      - .cache/");
    for level in 1..extends_depth {
        let _ = writeln!(y, ".tpl{level}:");
        let _ = writeln!(y, "  extends: .tpl{}", level - 1);
        let _ = writeln!(y, "  variables:");
        let _ = writeln!(y, "    LEVEL{level}: value-$LEVEL{}", level - 1);
    }
    for i in 0..job_count {
        let _ = writeln!(y);
        let _ = writeln!(y, "job{i:02}:");
        let _ = writeln!(y, "  extends: .tpl{}", extends_depth - 1);
        let _ = writeln!(y, "  stage: s{}", i % 6);
        if i % 4 == 3 && (i - 3) % 6 < i % 6 {
            let _ = writeln!(y, "  needs: [job{:02}]", i - 3);
            let _ = writeln!(y, "  dependencies: [job{:02}]", i - 3);
        }
        if i % 3 == 0 {
            let _ = writeln!(y, "  artifacts:");
            let _ = writeln!(y, "    paths:");
            let _ = writeln!(y, "      - dist/");
        }
        if i % 10 == 0 {
            let _ = writeln!(y, "  parallel:");
            let _ = writeln!(y, "    matrix:");
            let _ = writeln!(y, "      - ARCH: [amd64, arm64]");
        }
        let _ = writeln!(y, "  script:");
        if i % 5 == 0 {
            let _ = writeln!(y, "    - pip install -r requirements.txt");
        }
        if i % 7 == 0 {
            let _ = writeln!(y, "    - docker build -t app/img .");
        }
        for step in 0..24 {
            let _ = writeln!(y, "    - echo step {i}-{step}");
        }
    }
    let padding = min_lines.saturating_sub(y.lines().count());
    for _ in 0..padding {
        let _ = writeln!(y, "# corpus padding");
    }
    y
}

/// Single-quotes a scalar unless it is obviously safe as plain YAML.
fn quote(s: &str) -> String {
    let first_safe = s.chars().next().is_some_and(|c| {
        !"!&*?{}[]#|>@`\"'%,- ".contains(c) || (c == '-' && s.len() > 1 && !s.starts_with("- "))
    });
    let body_safe = !s.contains(": ")
        && !s.ends_with(':')
        && !s.contains(" #")
        && !s.ends_with(' ')
        && !s.contains('\t');
    let plain_safe = first_safe
        && body_safe
        && !matches!(
            s,
            "" | "~"
                | "null"
                | "Null"
                | "NULL"
                | "true"
                | "True"
                | "TRUE"
                | "false"
                | "False"
                | "FALSE"
                | "yes"
                | "no"
                | "on"
                | "off"
        );
    if plain_safe {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "''"))
    }
}
