//! Local `include:` resolution.
//!
//! Only includes living in the same repository can be read here; remote,
//! template, project, and component includes are skipped with a warning so
//! the caller knows coverage is partial. Included files are inlined by
//! top-level key: files listed later win over earlier ones, and the
//! including file wins over everything it includes — mirroring how the
//! platform layers configuration.

use std::path::{Component, Path, PathBuf};

use crate::frontend::loader::parse_str;
use crate::frontend::tree::{MapEntry, NodeValue, RawDocument, RawNode};
use crate::frontend::LoadError;
use crate::location::SourceLocation;

/// How many files one workflow may pull in (the entry file included).
/// Beyond this the chain is reported as if it were cyclic.
const MAX_INCLUDE_DEPTH: usize = 100;

/// Loads a workflow file, inlining local includes relative to `repo_root`.
pub fn load_workflow(workflow: &Path, repo_root: &Path) -> Result<RawDocument, LoadError> {
    let mut warnings = Vec::new();
    let mut chain: Vec<PathBuf> = Vec::new();
    let entries = load_file(workflow, repo_root, &mut chain, &mut warnings)?;
    let root = RawNode {
        value: NodeValue::Mapping(entries),
        location: SourceLocation::new(display_path(workflow, repo_root), 1, Vec::new()),
    };
    Ok(RawDocument { root, warnings })
}

/// Loads one file and returns its top-level entries with includes already
/// folded in. `chain` holds the normalized paths currently being loaded,
/// outermost first, for cycle reporting.
fn load_file(
    file: &Path,
    repo_root: &Path,
    chain: &mut Vec<PathBuf>,
    warnings: &mut Vec<String>,
) -> Result<Vec<MapEntry>, LoadError> {
    let normalized = normalize(file);
    if chain.contains(&normalized) || chain.len() >= MAX_INCLUDE_DEPTH {
        let mut cycle: Vec<String> = chain.iter().map(|p| display_path(p, repo_root)).collect();
        cycle.push(display_path(&normalized, repo_root));
        return Err(LoadError::IncludeCycle { chain: cycle });
    }
    chain.push(normalized);

    let display = display_path(file, repo_root);
    let source = std::fs::read_to_string(file).map_err(|err| LoadError::Io {
        path: display.clone(),
        message: err.to_string(),
    })?;
    let parsed = parse_str(&source, &display)?;
    if parsed.extra_documents > 0 {
        warnings.push(format!(
            "{display}: contains {} extra YAML document(s); only the first is analyzed",
            parsed.extra_documents
        ));
    }
    let NodeValue::Mapping(own_entries) = parsed.root.value else {
        unreachable!("parse_str only returns mapping roots");
    };

    // Gather what the include clause asks for, then layer: earlier includes
    // are overridden by later ones, and the including file overrides all.
    let mut merged: Vec<MapEntry> = Vec::new();
    for entry in &own_entries {
        if entry.key != "include" {
            continue;
        }
        for target in include_targets(&entry.value, warnings) {
            let resolved = resolve_local(&target, repo_root);
            let child = load_file(&resolved, repo_root, chain, warnings)?;
            layer(&mut merged, child);
        }
    }
    let own: Vec<MapEntry> = own_entries
        .into_iter()
        .filter(|entry| entry.key != "include")
        .collect();
    layer(&mut merged, own);

    chain.pop();
    Ok(merged)
}

/// Replaces same-keyed entries in place (keeping first-seen position) and
/// appends new ones, so later layers win without reshuffling document order.
fn layer(base: &mut Vec<MapEntry>, overlay: Vec<MapEntry>) {
    for entry in overlay {
        match base.iter_mut().find(|existing| existing.key == entry.key) {
            Some(existing) => *existing = entry,
            None => base.push(entry),
        }
    }
}

/// Extracts the local file paths named by an `include:` clause, warning
/// about forms that cannot be followed from a checkout.
fn include_targets(node: &RawNode, warnings: &mut Vec<String>) -> Vec<String> {
    let mut targets = Vec::new();
    let items: Vec<&RawNode> = match &node.value {
        NodeValue::Sequence(items) => items.iter().collect(),
        _ => vec![node],
    };
    for item in items {
        match &item.value {
            NodeValue::Scalar { text, .. } => push_local(text, item, warnings, &mut targets),
            NodeValue::Mapping(_) => {
                if item.get("rules").is_some() || item.get("inputs").is_some() {
                    warnings.push(format!(
                        "{}: include rules/inputs are not evaluated; the file is included unconditionally",
                        item.location
                    ));
                }
                if let Some(local) = item.get("local").and_then(|n| n.as_str()) {
                    push_local(local, item, warnings, &mut targets);
                } else if let Some(kind) = ["remote", "template", "project", "component"]
                    .into_iter()
                    .find(|k| item.get(k).is_some())
                {
                    let reference = item
                        .get(kind)
                        .and_then(|n| n.as_str())
                        .unwrap_or("<non-scalar>");
                    warnings.push(format!(
                        "{}: skipping `{kind}` include `{reference}`; only local includes are resolved",
                        item.location
                    ));
                } else {
                    warnings.push(format!(
                        "{}: unrecognized include entry; skipped",
                        item.location
                    ));
                }
            }
            NodeValue::Sequence(_) => warnings.push(format!(
                "{}: unrecognized include entry; skipped",
                item.location
            )),
        }
    }
    targets
}

fn push_local(path: &str, node: &RawNode, warnings: &mut Vec<String>, targets: &mut Vec<String>) {
    if path.contains('*') {
        warnings.push(format!(
            "{}: wildcard include `{path}` is not resolved; matching files are skipped",
            node.location
        ));
    } else {
        targets.push(path.to_string());
    }
}

/// Local include paths are relative to the repository root; a leading `/`
/// spells that out explicitly.
fn resolve_local(target: &str, repo_root: &Path) -> PathBuf {
    repo_root.join(target.trim_start_matches('/'))
}

/// Lexical normalization (no filesystem access): resolves `.` and `..` so
/// the same file reached through different spellings is recognized.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for component in path.components() {
        match component {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push(Component::ParentDir);
                }
            }
            other => out.push(other),
        }
    }
    out
}

/// Paths in locations and messages are shown relative to the repository
/// root when possible.
fn display_path(path: &Path, repo_root: &Path) -> String {
    let normalized = normalize(path);
    let base = normalize(repo_root);
    normalized
        .strip_prefix(&base)
        .unwrap_or(&normalized)
        .display()
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::TempDir;

    fn write(root: &Path, rel: &str, content: &str) -> PathBuf {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn local_include_inlines_with_locations_in_the_included_file() {
        let dir = TempDir::new().unwrap();
        let root = dir.path();
        let main = write(
            root,
            ".gitlab-ci.yml",
            "include:\n  - local: ci/jobs.yml\nstages: [build]\n",
        );
        write(
            root,
            "ci/jobs.yml",
            "compile:\n  stage: build\n  script: make\n",
        );

        let doc = load_workflow(&main, root).unwrap();
        let compile = doc.root.entry("compile").unwrap();
        assert_eq!(compile.key_location.file, "ci/jobs.yml");
        assert_eq!(compile.key_location.line, 1);
        assert!(doc.root.get("include").is_none());
        assert!(doc.root.get("stages").is_some());
    }

    #[test]
    fn including_file_wins_then_later_includes_win() {
        let dir = TempDir::new().unwrap();
        let root = dir.path();
        let main = write(
            root,
            ".gitlab-ci.yml",
            "include:\n  - a.yml\n  - b.yml\nmine: main\n",
        );
        write(root, "a.yml", "shared: from-a\nonly_a: a\nmine: a\n");
        write(root, "b.yml", "shared: from-b\n");

        let doc = load_workflow(&main, root).unwrap();
        assert_eq!(doc.root.get("shared").unwrap().as_str(), Some("from-b"));
        assert_eq!(doc.root.get("mine").unwrap().as_str(), Some("main"));
        assert_eq!(doc.root.get("only_a").unwrap().as_str(), Some("a"));
    }

    #[test]
    fn include_cycles_are_reported_with_the_chain() {
        let dir = TempDir::new().unwrap();
        let root = dir.path();
        let main = write(root, ".gitlab-ci.yml", "include: a.yml\n");
        write(root, "a.yml", "include: b.yml\n");
        write(root, "b.yml", "include: a.yml\n");

        let err = load_workflow(&main, root).unwrap_err();
        match err {
            LoadError::IncludeCycle { chain } => {
                assert_eq!(chain.last().map(String::as_str), Some("a.yml"));
                assert!(chain.len() >= 3);
            }
            other => panic!("expected IncludeCycle, got {other:?}"),
        }
    }

    #[test]
    fn non_local_includes_warn_and_are_skipped() {
        let dir = TempDir::new().unwrap();
        let root = dir.path();
        let main = write(
            root,
            ".gitlab-ci.yml",
            "include:\n  - remote: https://example.com/x.yml\n  - template: Auto-DevOps.gitlab-ci.yml\njob:\n  script: ls\n",
        );
        let doc = load_workflow(&main, root).unwrap();
        assert_eq!(doc.warnings.len(), 2);
        assert!(doc.warnings[0].contains("remote"));
        assert!(doc.warnings[1].contains("template"));
        assert!(doc.root.get("job").is_some());
    }

    #[test]
    fn nested_includes_resolve_relative_to_the_repo_root() {
        let dir = TempDir::new().unwrap();
        let root = dir.path();
        let main = write(root, ".gitlab-ci.yml", "include: ci/outer.yml\n");
        // `inner.yml` sits at the root; the nested include must not be taken
        // relative to ci/.
        write(root, "ci/outer.yml", "include: /inner.yml\nouter_key: 1\n");
        write(root, "inner.yml", "inner_key: 2\n");

        let doc = load_workflow(&main, root).unwrap();
        assert!(doc.root.get("outer_key").is_some());
        assert!(doc.root.get("inner_key").is_some());
    }

    #[test]
    fn missing_included_file_is_an_io_error() {
        let dir = TempDir::new().unwrap();
        let root = dir.path();
        let main = write(root, ".gitlab-ci.yml", "include: nope.yml\n");
        assert!(matches!(
            load_workflow(&main, root).unwrap_err(),
            LoadError::Io { path, .. } if path == "nope.yml"
        ));
    }
}
