//! Event-driven YAML loading into the located tree.
//!
//! Built on the pull parser's marked event stream rather than a generic
//! value loader so that every node keeps its source line and path. Aliases
//! are substituted eagerly (the cloned subtree keeps the locations of the
//! anchored definition — that is where a reader should look), `<<` merge
//! keys are folded per the YAML merge-key convention, and duplicate mapping
//! keys are rejected outright instead of silently keeping one side.

use std::collections::HashMap;

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser};
use yaml_rust2::scanner::{Marker, TScalarStyle};

use crate::frontend::tree::{MapEntry, NodeValue, RawNode, ScalarStyle};
use crate::frontend::LoadError;
use crate::location::{PathSegment, SourceLocation};

/// Result of parsing one file: the root node of the first document and how
/// many further documents the file contained (they are ignored upstream,
/// with a warning).
#[derive(Debug)]
pub struct ParsedYaml {
    pub root: RawNode,
    pub extra_documents: usize,
}

/// Parses YAML source into a located tree and checks that the document root
/// is a mapping — the only shape a workflow file can have.
pub fn parse_str(source: &str, file: &str) -> Result<ParsedYaml, LoadError> {
    let mut builder = TreeBuilder::new(file);
    let mut parser = Parser::new_from_str(source);
    let parse_result = parser.load(&mut builder, true);
    // A structural error noticed by the builder (duplicate key, complex key)
    // is more precise than the generic scan error, so it wins.
    if let Some(err) = builder.error.take() {
        return Err(err);
    }
    if let Err(scan) = parse_result {
        let marker = scan.marker();
        return Err(LoadError::MalformedYaml {
            file: file.to_string(),
            line: marker.line(),
            col: marker.col() + 1,
            message: scan.info().to_string(),
        });
    }
    let mut docs = builder.documents.into_iter();
    let root = docs.next().ok_or_else(|| LoadError::NotAMapping {
        file: file.to_string(),
        found: "empty document".to_string(),
    })?;
    if !root.is_mapping() {
        return Err(LoadError::NotAMapping {
            file: file.to_string(),
            found: root.kind_name().to_string(),
        });
    }
    Ok(ParsedYaml {
        root,
        extra_documents: docs.len(),
    })
}

/// Stack frame for a container currently being built.
enum Frame {
    Sequence {
        items: Vec<RawNode>,
        location: SourceLocation,
        anchor: usize,
    },
    Mapping {
        entries: Vec<MapEntry>,
        pending_key: Option<(String, SourceLocation)>,
        location: SourceLocation,
        anchor: usize,
    },
}

struct TreeBuilder {
    file: String,
    documents: Vec<RawNode>,
    stack: Vec<Frame>,
    /// Anchored nodes by parser-assigned anchor id, per document.
    anchors: HashMap<usize, RawNode>,
    error: Option<LoadError>,
}

impl TreeBuilder {
    fn new(file: &str) -> Self {
        TreeBuilder {
            file: file.to_string(),
            documents: Vec::new(),
            stack: Vec::new(),
            anchors: HashMap::new(),
            error: None,
        }
    }

    /// Path of the slot the next value node will occupy.
    fn slot_path(&self) -> Vec<PathSegment> {
        match self.stack.last() {
            None => Vec::new(),
            Some(Frame::Sequence {
                items, location, ..
            }) => {
                let mut path = location.yaml_path.clone();
                path.push(PathSegment::Index(items.len()));
                path
            }
            Some(Frame::Mapping {
                pending_key,
                location,
                ..
            }) => {
                let mut path = location.yaml_path.clone();
                if let Some((key, _)) = pending_key {
                    path.push(PathSegment::Key(key.clone()));
                }
                path
            }
        }
    }

    fn awaiting_mapping_key(&self) -> bool {
        matches!(
            self.stack.last(),
            Some(Frame::Mapping {
                pending_key: None,
                ..
            })
        )
    }

    fn location_at(&self, marker: Marker, path: Vec<PathSegment>) -> SourceLocation {
        SourceLocation::new(self.file.clone(), marker.line(), path)
    }

    /// Attaches a completed node to the enclosing container, or records it
    /// as a document root.
    fn attach(&mut self, node: RawNode) {
        match self.stack.last_mut() {
            None => self.documents.push(node),
            Some(Frame::Sequence { items, .. }) => items.push(node),
            Some(Frame::Mapping {
                entries,
                pending_key,
                ..
            }) => {
                let (key, key_location) = pending_key
                    .take()
                    .expect("value node attached to a mapping without a pending key");
                entries.push(MapEntry {
                    key,
                    key_location,
                    value: node,
                });
            }
        }
    }

    fn begin_key(&mut self, text: String, marker: Marker) {
        let Some(Frame::Mapping {
            entries,
            pending_key,
            location,
            ..
        }) = self.stack.last_mut()
        else {
            unreachable!("begin_key called outside a mapping frame");
        };
        if entries.iter().any(|entry| entry.key == text) {
            self.error = Some(LoadError::DuplicateKey {
                file: self.file.clone(),
                line: marker.line(),
                key: text,
            });
            return;
        }
        let mut path = location.yaml_path.clone();
        path.push(PathSegment::Key(text.clone()));
        let key_location = SourceLocation::new(self.file.clone(), marker.line(), path);
        *pending_key = Some((text, key_location));
    }

    fn register_anchor(&mut self, anchor: usize, node: &RawNode) {
        if anchor != 0 {
            self.anchors.insert(anchor, node.clone());
        }
    }

    /// Folds `<<` merge keys: explicit keys win over merged ones, and among
    /// several merge sources the earliest listed wins. Merged-in entries are
    /// appended after explicit ones, keeping their defining locations.
    fn fold_merge_keys(&mut self, entries: Vec<MapEntry>, marker: Marker) -> Vec<MapEntry> {
        let mut explicit = Vec::with_capacity(entries.len());
        let mut sources: Vec<RawNode> = Vec::new();
        for entry in entries {
            if entry.key == "<<" {
                match entry.value.value {
                    NodeValue::Mapping(_) => sources.push(entry.value),
                    NodeValue::Sequence(items) => sources.extend(items),
                    NodeValue::Scalar { .. } => {
                        self.error = Some(LoadError::MalformedYaml {
                            file: self.file.clone(),
                            line: entry.key_location.line,
                            col: 1,
                            message: "merge key `<<` expects a mapping or a list of mappings"
                                .to_string(),
                        });
                        return Vec::new();
                    }
                }
            } else {
                explicit.push(entry);
            }
        }
        let mut merged = explicit;
        for source in sources {
            let NodeValue::Mapping(source_entries) = source.value else {
                self.error = Some(LoadError::MalformedYaml {
                    file: self.file.clone(),
                    line: marker.line(),
                    col: 1,
                    message: "merge key `<<` expects a mapping or a list of mappings".to_string(),
                });
                return Vec::new();
            };
            for entry in source_entries {
                if !merged.iter().any(|existing| existing.key == entry.key) {
                    merged.push(entry);
                }
            }
        }
        merged
    }
}

impl MarkedEventReceiver for TreeBuilder {
    fn on_event(&mut self, event: Event, marker: Marker) {
        if self.error.is_some() {
            return;
        }
        match event {
            Event::StreamStart | Event::StreamEnd | Event::DocumentEnd | Event::Nothing => {}
            Event::DocumentStart => {
                self.anchors.clear();
            }
            Event::Scalar(text, style, anchor, _tag) => {
                if self.awaiting_mapping_key() {
                    self.begin_key(text, marker);
                    return;
                }
                let location = self.location_at(marker, self.slot_path());
                let node = RawNode::scalar(text, convert_style(style), location);
                self.register_anchor(anchor, &node);
                self.attach(node);
            }
            Event::SequenceStart(anchor, _tag) => {
                if self.awaiting_mapping_key() {
                    self.error = Some(self.complex_key_error(marker));
                    return;
                }
                let location = self.location_at(marker, self.slot_path());
                self.stack.push(Frame::Sequence {
                    items: Vec::new(),
                    location,
                    anchor,
                });
            }
            Event::SequenceEnd => {
                let Some(Frame::Sequence {
                    items,
                    location,
                    anchor,
                }) = self.stack.pop()
                else {
                    unreachable!("sequence end without a sequence frame");
                };
                let node = RawNode {
                    value: NodeValue::Sequence(items),
                    location,
                };
                self.register_anchor(anchor, &node);
                self.attach(node);
            }
            Event::MappingStart(anchor, _tag) => {
                if self.awaiting_mapping_key() {
                    self.error = Some(self.complex_key_error(marker));
                    return;
                }
                let location = self.location_at(marker, self.slot_path());
                self.stack.push(Frame::Mapping {
                    entries: Vec::new(),
                    pending_key: None,
                    location,
                    anchor,
                });
            }
            Event::MappingEnd => {
                let Some(Frame::Mapping {
                    entries,
                    location,
                    anchor,
                    pending_key: _,
                }) = self.stack.pop()
                else {
                    unreachable!("mapping end without a mapping frame");
                };
                let entries = self.fold_merge_keys(entries, marker);
                if self.error.is_some() {
                    return;
                }
                let node = RawNode {
                    value: NodeValue::Mapping(entries),
                    location,
                };
                self.register_anchor(anchor, &node);
                self.attach(node);
            }
            Event::Alias(anchor) => {
                let Some(target) = self.anchors.get(&anchor).cloned() else {
                    self.error = Some(LoadError::MalformedYaml {
                        file: self.file.clone(),
                        line: marker.line(),
                        col: marker.col() + 1,
                        message: "alias refers to an unknown anchor".to_string(),
                    });
                    return;
                };
                if self.awaiting_mapping_key() {
                    // An alias can serve as a mapping key when it names a
                    // scalar; anything else has no key representation.
                    match target.as_str() {
                        Some(text) => self.begin_key(text.to_string(), marker),
                        None => self.error = Some(self.complex_key_error(marker)),
                    }
                    return;
                }
                // The clone keeps the anchored definition's locations; that
                // is where the shared content actually lives.
                self.attach(target);
            }
        }
    }
}

impl TreeBuilder {
    fn complex_key_error(&self, marker: Marker) -> LoadError {
        LoadError::MalformedYaml {
            file: self.file.clone(),
            line: marker.line(),
            col: marker.col() + 1,
            message: "mapping keys must be scalars".to_string(),
        }
    }
}

fn convert_style(style: TScalarStyle) -> ScalarStyle {
    match style {
        TScalarStyle::Plain => ScalarStyle::Plain,
        TScalarStyle::SingleQuoted => ScalarStyle::SingleQuoted,
        TScalarStyle::DoubleQuoted => ScalarStyle::DoubleQuoted,
        TScalarStyle::Literal => ScalarStyle::Literal,
        TScalarStyle::Folded => ScalarStyle::Folded,
    }
}
