//! YAML frontend: parsing workflow files into a located tree with anchors
//! resolved and local includes inlined.

mod includes;
mod loader;
pub mod tree;

pub use includes::load_workflow;
pub use loader::{parse_str, ParsedYaml};
pub use tree::{MapEntry, NodeValue, RawDocument, RawNode, ScalarStyle};

use thiserror::Error;

/// Errors while turning a workflow file into a tree.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("failed to read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}:{line}:{col}: malformed YAML: {message}")]
    MalformedYaml {
        file: String,
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{file}:{line}: duplicate mapping key `{key}`")]
    DuplicateKey {
        file: String,
        line: usize,
        key: String,
    },
    #[error("include cycle or include chain too deep: {}", chain.join(" -> "))]
    IncludeCycle { chain: Vec<String> },
    #[error("{file}: top-level YAML value is a {found}, expected a mapping of workflow keys")]
    NotAMapping { file: String, found: String },
}
