//! Container image reference parsing.
//!
//! An image address is `[registry/]repository[:tag][@digest]`. The first
//! path component names a registry only when it could be a host: it contains
//! a dot or a colon, or is exactly `localhost` — the same heuristic the
//! container tooling applies. References that cannot be fully expanded are
//! left unsplit; consumers must check `fully_resolved` before trusting the
//! parts.

use indexmap::IndexMap;

use super::variables::expand;
use super::{ImageOrigin, ImageRef};
use crate::location::SourceLocation;

/// Parses an image reference, expanding variables under `scopes` first.
pub fn parse_image(
    raw: &str,
    scopes: &[&IndexMap<String, String>],
    origin: ImageOrigin,
    location: SourceLocation,
) -> ImageRef {
    let value = expand(raw, scopes);
    if !value.fully_resolved {
        return ImageRef {
            raw: value.raw,
            repository: value.expanded.clone(),
            expanded: value.expanded,
            fully_resolved: false,
            registry: None,
            tag: None,
            digest: None,
            origin,
            location,
        };
    }
    let (registry, repository, tag, digest) = split_reference(&value.expanded);
    ImageRef {
        raw: value.raw,
        expanded: value.expanded,
        fully_resolved: true,
        registry,
        repository,
        tag,
        digest,
        origin,
        location,
    }
}

/// Whether a path component can address a registry host.
pub fn is_registry_host(component: &str) -> bool {
    component == "localhost" || component.contains('.') || component.contains(':')
}

fn split_reference(reference: &str) -> (Option<String>, String, Option<String>, Option<String>) {
    let (rest, digest) = match reference.split_once('@') {
        Some((rest, digest)) => (rest, Some(digest.to_string())),
        None => (reference, None),
    };
    let (registry, name_and_tag) = match rest.split_once('/') {
        Some((head, tail)) if is_registry_host(head) => (Some(head.to_string()), tail),
        _ => (None, rest),
    };
    // The tag separator is a colon after the last slash; colons earlier in
    // the path can only belong to a registry port, which is already split.
    let tag_split = match name_and_tag.rfind('/') {
        Some(slash) => name_and_tag[slash..].find(':').map(|i| slash + i),
        None => name_and_tag.find(':'),
    };
    match tag_split {
        Some(colon) => (
            registry,
            name_and_tag[..colon].to_string(),
            Some(name_and_tag[colon + 1..].to_string()),
            digest,
        ),
        None => (registry, name_and_tag.to_string(), None, digest),
    }
}

impl ImageRef {
    /// Reassembles the address parts; for fully resolved references this is
    /// exactly the expanded string.
    pub fn reassemble(&self) -> String {
        let mut out = String::new();
        if let Some(registry) = &self.registry {
            out.push_str(registry);
            out.push('/');
        }
        out.push_str(&self.repository);
        if let Some(tag) = &self.tag {
            out.push(':');
            out.push_str(tag);
        }
        if let Some(digest) = &self.digest {
            out.push('@');
            out.push_str(digest);
        }
        out
    }
}
