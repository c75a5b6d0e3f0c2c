//! Source locations for nodes of a parsed workflow file.
//!
//! Every value extracted from a workflow carries the file it came from, the
//! 1-indexed line it starts on, and the path of mapping keys / sequence
//! indices leading to it from the document root. Findings surface these
//! locations so a reader can jump straight to the offending clause.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

/// One step in a YAML path: either a mapping key or a sequence index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathSegment {
    Key(String),
    Index(usize),
}

impl Serialize for PathSegment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PathSegment::Key(k) => serializer.serialize_str(k),
            PathSegment::Index(i) => serializer.serialize_u64(*i as u64),
        }
    }
}

impl fmt::Display for PathSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathSegment::Key(k) => write!(f, "{k}"),
            PathSegment::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Where a value lives: file, 1-indexed line, and the YAML path to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceLocation {
    /// Path of the file the value was read from, relative to the repository
    /// root whenever possible (include resolution can point into sibling
    /// files, so this is not always the entry workflow file).
    pub file: String,
    /// 1-indexed line number of the value's first token.
    pub line: usize,
    /// Mapping keys and sequence indices from the document root to the value.
    #[serde(serialize_with = "serialize_path")]
    pub yaml_path: Vec<PathSegment>,
}

fn serialize_path<S: Serializer>(path: &[PathSegment], serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(path.len()))?;
    for segment in path {
        seq.serialize_element(segment)?;
    }
    seq.end()
}

impl SourceLocation {
    pub fn new(file: impl Into<String>, line: usize, yaml_path: Vec<PathSegment>) -> Self {
        SourceLocation {
            file: file.into(),
            line,
            yaml_path,
        }
    }

    /// Renders the path in dotted form, e.g. `build_app.artifacts.paths.0`.
    pub fn path_string(&self) -> String {
        let mut out = String::new();
        for (i, segment) in self.yaml_path.iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            out.push_str(&segment.to_string());
        }
        out
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}
