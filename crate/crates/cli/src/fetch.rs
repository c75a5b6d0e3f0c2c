//! Remote ingestion over the GitLab REST API.
//!
//! Two requests per project: the project endpoint for namespace kind,
//! default branch, and CI config path, then the raw-file endpoint for the
//! workflow itself. Results land in the same layout `corpus` reads:
//! `<out>/.gitlab-ci.yml` plus `<out>/metadata.json` with the group flag.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use percent_encoding::{percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;

/// Characters that stay unescaped inside one URL path segment (the RFC 3986
/// unreserved set). Everything else is percent-encoded — notably `/` in
/// project and file paths, which the API requires as `%2F`.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'_')
    .remove(b'.')
    .remove(b'~');

fn encode(segment: &str) -> String {
    percent_encode(segment.as_bytes(), SEGMENT).to_string()
}

pub struct HttpReply {
    pub status: u16,
    /// Seconds from a `Retry-After` header, when the server sent one.
    pub retry_after: Option<u64>,
    pub body: String,
}

/// The one seam between fetching logic and the network, so tests can
/// script replies without a server.
pub trait Transport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpReply>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        HttpTransport {
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .user_agent(concat!("cachelint/", env!("CARGO_PKG_VERSION")))
                .build()
                .expect("static client configuration"),
        }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpReply> {
        let mut request = self.client.get(url);
        if let Some(token) = token {
            request = request.header("PRIVATE-TOKEN", token);
        }
        let response = request.send().with_context(|| format!("GET {url}"))?;
        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("Retry-After")
            .and_then(|value| value.to_str().ok())
            .and_then(|value| value.parse().ok());
        let body = response.text().unwrap_or_default();
        Ok(HttpReply {
            status,
            retry_after,
            body,
        })
    }
}

#[derive(Deserialize)]
struct ProjectInfo {
    namespace: Namespace,
    default_branch: Option<String>,
    ci_config_path: Option<String>,
}

#[derive(Deserialize)]
struct Namespace {
    kind: String,
}

#[derive(Debug)]
pub struct FetchSummary {
    pub is_group: bool,
    pub config_path: String,
    pub branch: String,
    pub workflow_path: PathBuf,
}

const MAX_ATTEMPTS: u32 = 3;
const MAX_BACKOFF_SECONDS: u64 = 30;

/// GETs a URL, retrying up to twice on HTTP 429 and honoring `Retry-After`
/// (capped so a hostile header cannot stall the client for minutes).
fn get_with_retry<T: Transport>(
    transport: &T,
    url: &str,
    token: Option<&str>,
) -> Result<HttpReply> {
    for attempt in 1..=MAX_ATTEMPTS {
        let reply = transport.get(url, token)?;
        if reply.status != 429 {
            return Ok(reply);
        }
        if attempt < MAX_ATTEMPTS {
            let wait = reply.retry_after.unwrap_or(1).min(MAX_BACKOFF_SECONDS);
            thread::sleep(Duration::from_secs(wait));
        }
    }
    bail!("GET {url}: rate limited after {MAX_ATTEMPTS} attempts (HTTP 429)");
}

pub fn fetch_project<T: Transport>(
    transport: &T,
    endpoint: &str,
    project: &str,
    token: Option<&str>,
    out: &Path,
) -> Result<FetchSummary> {
    let endpoint = endpoint.trim_end_matches('/');

    let project_url = format!("{endpoint}/api/v4/projects/{}", encode(project));
    let reply = get_with_retry(transport, &project_url, token)?;
    match reply.status {
        200 => {}
        404 => bail!("project `{project}` not found (or not visible with this token)"),
        status => bail!("GET {project_url}: HTTP {status}"),
    }
    let info: ProjectInfo = serde_json::from_str(&reply.body)
        .with_context(|| format!("unexpected project metadata from {project_url}"))?;
    let is_group = info.namespace.kind == "group";
    let branch = info
        .default_branch
        .ok_or_else(|| anyhow!("project `{project}` has no default branch (empty repository?)"))?;
    let config_path = match info.ci_config_path.filter(|path| !path.is_empty()) {
        // `path@other/project` points at a different repository; there is
        // no workflow to fetch from this one.
        Some(path) if path.contains('@') => {
            bail!("project `{project}` keeps its workflow in another repository ({path})")
        }
        Some(path) => path,
        None => ".gitlab-ci.yml".to_string(),
    };

    let file_url = format!(
        "{endpoint}/api/v4/projects/{}/repository/files/{}/raw?ref={}",
        encode(project),
        encode(&config_path),
        encode(&branch),
    );
    let reply = get_with_retry(transport, &file_url, token)?;
    match reply.status {
        200 => {}
        404 => bail!("project `{project}` has no workflow file at `{config_path}` on `{branch}`"),
        status => bail!("GET {file_url}: HTTP {status}"),
    }

    fs::create_dir_all(out).with_context(|| format!("cannot create `{}`", out.display()))?;
    let workflow_path = out.join(".gitlab-ci.yml");
    fs::write(&workflow_path, &reply.body)
        .with_context(|| format!("cannot write `{}`", workflow_path.display()))?;
    let metadata = serde_json::json!({ "is_group": is_group });
    let metadata_path = out.join("metadata.json");
    fs::write(
        &metadata_path,
        serde_json::to_string_pretty(&metadata)? + "\n",
    )
    .with_context(|| format!("cannot write `{}`", metadata_path.display()))?;

    Ok(FetchSummary {
        is_group,
        config_path,
        branch,
        workflow_path,
    })
}
