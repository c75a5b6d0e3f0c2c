//! Command-line front end: analyze one workflow, sweep a corpus, score
//! detector output against labels, or fetch a project from a GitLab API.
//!
//! Exit codes: 0 on success, 1 when `--fail-on-findings` is set and the
//! analysis found smells, 2 on any error (message on stderr).

mod fetch;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use cachelint_core::analyzer::analyze_workflow;
use cachelint_core::corpus::{aggregate, analyze_corpus, load_central_metadata};
use cachelint_core::eval::{evaluate, parse_labels_csv, render_table};
use cachelint_core::report::render_text;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cachelint",
    version,
    about = "Detects cache and artifact smells in GitLab CI/CD workflows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one workflow file and report its findings
    Analyze(AnalyzeArgs),
    /// Analyze every repository under a directory and aggregate statistics
    Corpus(CorpusArgs),
    /// Score detector output against hand-labeled ground truth
    Eval(EvalArgs),
    /// Download a project's workflow file and namespace kind from a GitLab API
    Fetch(FetchArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Workflow file to analyze
    file: PathBuf,

    /// Repository root for `include:local` resolution and repository naming
    /// (defaults to the workflow file's directory)
    #[arg(long)]
    repo_root: Option<PathBuf>,

    /// Whether the repository lives in a group namespace; `auto` reads
    /// `metadata.json` next to the workflow if present
    #[arg(long, value_enum, default_value_t = GroupFlag::Auto)]
    group: GroupFlag,

    /// Output format for the report
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Exit with status 1 when findings are present
    #[arg(long)]
    fail_on_findings: bool,

    /// Write the execution graph in DOT form to this path
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupFlag {
    True,
    False,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory with one subdirectory per repository
    dir: PathBuf,

    /// Central metadata file mapping repository names to group status
    #[arg(long)]
    metadata: Option<PathBuf>,

    /// Write aggregated statistics as JSON to this path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Number of worker threads (default: one per CPU)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV of hand labels: repo, smell, present
    #[arg(long)]
    labels: PathBuf,

    /// Corpus directory to analyze and score
    #[arg(long)]
    corpus: PathBuf,

    /// Write per-detector and aggregate metrics as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    /// Project ID or full path (e.g. `group/project`)
    #[arg(long)]
    project: String,

    /// Base URL of the GitLab instance
    #[arg(long, default_value = "https://gitlab.com")]
    endpoint: String,

    /// Name of the environment variable holding the API token; the token
    /// itself is never passed on the command line
    #[arg(long, default_value = "GITLAB_TOKEN")]
    token_env: String,

    /// Directory to write `.gitlab-ci.yml` and `metadata.json` into
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Corpus(args) => run_corpus(args),
        Command::Eval(args) => run_eval(args),
        Command::Fetch(args) => run_fetch(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> anyhow::Result<u8> {
    let root = match &args.repo_root {
        Some(root) => root.clone(),
        None => args
            .file
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf(),
    };
    let group = match args.group {
        GroupFlag::True => Some(true),
        GroupFlag::False => Some(false),
        GroupFlag::Auto => read_repo_metadata(&root),
    };
    let analysis = analyze_workflow(&args.file, args.repo_root.as_deref(), group)
        .with_context(|| format!("cannot analyze `{}`", args.file.display()))?;
    if let Some(dot) = &args.dot {
        fs::write(dot, analysis.graph.to_dot())
            .with_context(|| format!("cannot write graph to `{}`", dot.display()))?;
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&analysis.report)?),
        Format::Text => print!("{}", render_text(&analysis.report)),
    }
    let failing = args.fail_on_findings && !analysis.report.findings.is_empty();
    Ok(if failing { 1 } else { 0 })
}

/// Group status recorded by `fetch` (or by hand) next to a workflow file.
fn read_repo_metadata(root: &Path) -> Option<bool> {
    let text = fs::read_to_string(root.join("metadata.json")).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value.get("is_group")?.as_bool()
}

fn run_corpus(args: CorpusArgs) -> anyhow::Result<u8> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot configure worker pool")?;
    }
    let central = match &args.metadata {
        Some(path) => load_central_metadata(path)?,
        None => BTreeMap::new(),
    };
    let run = analyze_corpus(&args.dir, &central)?;
    for skipped in &run.skipped {
        eprintln!("skipping {}: {}", skipped.repo_id, skipped.reason);
    }
    let stats = aggregate(&run.reports, run.skipped)?;
    let json = serde_json::to_string_pretty(&stats)?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n")
            .with_context(|| format!("cannot write statistics to `{}`", path.display()))?,
        None => println!("{json}"),
    }
    Ok(0)
}

fn run_eval(args: EvalArgs) -> anyhow::Result<u8> {
    let labels = parse_labels_csv(&args.labels)?;
    let run = analyze_corpus(&args.corpus, &BTreeMap::new())?;
    let result = evaluate(&labels, &run.reports)?;
    print!("{}", render_table(&result));
    if let Some(path) = &args.out {
        fs::write(path, serde_json::to_string_pretty(&result)? + "\n")
            .with_context(|| format!("cannot write metrics to `{}`", path.display()))?;
    }
    Ok(0)
}

fn run_fetch(args: FetchArgs) -> anyhow::Result<u8> {
    let token = std::env::var(&args.token_env).ok();
    let transport = fetch::HttpTransport::new();
    let summary = fetch::fetch_project(
        &transport,
        &args.endpoint,
        &args.project,
        token.as_deref(),
        &args.out,
    )?;
    println!(
        "saved {} ({} on {}, group: {})",
        summary.workflow_path.display(),
        summary.config_path,
        summary.branch,
        summary.is_group,
    );
    Ok(0)
}
