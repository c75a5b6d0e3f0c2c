//! Located YAML tree produced by the frontend.
//!
//! The tree deliberately keeps less than a general-purpose YAML value would:
//! scalars stay as strings (plus the quoting style, which matters when
//! deciding whether `"never"` was written literally), mappings preserve
//! document order, and every node remembers where it came from. Anchors and
//! aliases are already resolved by the time a [`RawNode`] exists.

use crate::location::SourceLocation;

/// Quoting style of a scalar, kept so later phases can tell a bare word from
/// a quoted string when that distinction is meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarStyle {
    Plain,
    SingleQuoted,
    DoubleQuoted,
    Literal,
    Folded,
}

/// A mapping entry. GitLab workflow keys are always scalars, so keys are
/// plain strings; each keeps its own location so findings can point at the
/// key line (e.g. a job name) rather than the first value under it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEntry {
    pub key: String,
    pub key_location: SourceLocation,
    pub value: RawNode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeValue {
    Scalar { text: String, style: ScalarStyle },
    Sequence(Vec<RawNode>),
    Mapping(Vec<MapEntry>),
}

/// One node of the located tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RawNode {
    pub value: NodeValue,
    pub location: SourceLocation,
}

impl RawNode {
    pub fn scalar(text: impl Into<String>, style: ScalarStyle, location: SourceLocation) -> Self {
        RawNode {
            value: NodeValue::Scalar {
                text: text.into(),
                style,
            },
            location,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.value, NodeValue::Scalar { .. })
    }

    pub fn is_mapping(&self) -> bool {
        matches!(self.value, NodeValue::Mapping(_))
    }

    pub fn is_sequence(&self) -> bool {
        matches!(self.value, NodeValue::Sequence(_))
    }

    pub fn as_str(&self) -> Option<&str> {
        match &self.value {
            NodeValue::Scalar { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&[RawNode]> {
        match &self.value {
            NodeValue::Sequence(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_mapping(&self) -> Option<&[MapEntry]> {
        match &self.value {
            NodeValue::Mapping(entries) => Some(entries),
            _ => None,
        }
    }

    /// Looks up a key in a mapping node. Returns `None` for non-mappings.
    pub fn get(&self, key: &str) -> Option<&RawNode> {
        self.as_mapping()?
            .iter()
            .find(|entry| entry.key == key)
            .map(|entry| &entry.value)
    }

    pub fn entry(&self, key: &str) -> Option<&MapEntry> {
        self.as_mapping()?.iter().find(|entry| entry.key == key)
    }

    /// YAML 1.1/1.2 boolean interpretation as GitLab applies it to plain
    /// scalars; quoted scalars are never booleans.
    pub fn as_bool(&self) -> Option<bool> {
        match &self.value {
            NodeValue::Scalar {
                text,
                style: ScalarStyle::Plain,
            } => match text.as_str() {
                "true" | "True" | "TRUE" | "yes" | "Yes" | "on" | "On" => Some(true),
                "false" | "False" | "FALSE" | "no" | "No" | "off" | "Off" => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    /// A plain `~`, `null`, or empty scalar — how YAML spells "no value".
    pub fn is_null(&self) -> bool {
        match &self.value {
            NodeValue::Scalar {
                text,
                style: ScalarStyle::Plain,
            } => matches!(text.as_str(), "" | "~" | "null" | "Null" | "NULL"),
            _ => false,
        }
    }

    /// Accepts either a scalar or a sequence of scalars, yielding the scalar
    /// texts. GitLab accepts both spellings for several list-valued clauses
    /// (`artifacts:paths`, `script`, ...).
    pub fn scalar_or_scalar_seq(&self) -> Option<Vec<&str>> {
        match &self.value {
            NodeValue::Scalar { text, .. } => Some(vec![text.as_str()]),
            NodeValue::Sequence(items) => items.iter().map(|n| n.as_str()).collect(),
            NodeValue::Mapping(_) => None,
        }
    }

    /// A short name for the node's shape, for error messages.
    pub fn kind_name(&self) -> &'static str {
        match &self.value {
            NodeValue::Scalar { .. } => "scalar",
            NodeValue::Sequence(_) => "sequence",
            NodeValue::Mapping(_) => "mapping",
        }
    }

    /// Structural equality: same shape, scalar texts, and key order,
    /// ignoring locations and scalar styles. Two documents that differ only
    /// in anchors/aliases versus spelled-out content compare equal here.
    pub fn structural_eq(&self, other: &RawNode) -> bool {
        match (&self.value, &other.value) {
            (NodeValue::Scalar { text: a, .. }, NodeValue::Scalar { text: b, .. }) => a == b,
            (NodeValue::Sequence(a), NodeValue::Sequence(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.structural_eq(y))
            }
            (NodeValue::Mapping(a), NodeValue::Mapping(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| x.key == y.key && x.value.structural_eq(&y.value))
            }
            _ => false,
        }
    }
}

/// A fully loaded workflow document: the root mapping with includes already
/// inlined, plus any non-fatal notes collected on the way.
#[derive(Debug, Clone)]
pub struct RawDocument {
    pub root: RawNode,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::location::PathSegment;

    fn loc(line: usize, path: Vec<PathSegment>) -> SourceLocation {
        SourceLocation::new("test.yml", line, path)
    }

    #[test]
    fn bool_interpretation_is_yaml_flavoured_and_plain_only() {
        let yes = RawNode::scalar("yes", ScalarStyle::Plain, loc(1, vec![]));
        let quoted = RawNode::scalar("true", ScalarStyle::DoubleQuoted, loc(1, vec![]));
        let word = RawNode::scalar("never", ScalarStyle::Plain, loc(1, vec![]));
        assert_eq!(yes.as_bool(), Some(true));
        assert_eq!(quoted.as_bool(), None);
        assert_eq!(word.as_bool(), None);
    }

    #[test]
    fn scalar_or_scalar_seq_accepts_both_spellings() {
        let single = RawNode::scalar("app.jar", ScalarStyle::Plain, loc(2, vec![]));
        assert_eq!(single.scalar_or_scalar_seq(), Some(vec!["app.jar"]));

        let seq = RawNode {
            value: NodeValue::Sequence(vec![
                RawNode::scalar("a", ScalarStyle::Plain, loc(3, vec![PathSegment::Index(0)])),
                RawNode::scalar("b", ScalarStyle::Plain, loc(4, vec![PathSegment::Index(1)])),
            ]),
            location: loc(3, vec![]),
        };
        assert_eq!(seq.scalar_or_scalar_seq(), Some(vec!["a", "b"]));
    }

    #[test]
    fn structural_eq_ignores_location_and_style() {
        let a = RawNode::scalar("v", ScalarStyle::Plain, loc(1, vec![]));
        let b = RawNode::scalar(
            "v",
            ScalarStyle::DoubleQuoted,
            loc(9, vec![PathSegment::Index(3)]),
        );
        assert!(a.structural_eq(&b));
        let c = RawNode::scalar("w", ScalarStyle::Plain, loc(1, vec![]));
        assert!(!a.structural_eq(&c));
    }
}
