//! Variable expansion the way the platform's runner does it: `$NAME` and
//! `${NAME}` references, `$$` as an escaped dollar, repeated until nothing
//! changes (with a pass cap so self-referential definitions terminate).
//!
//! Platform-predefined variables (`CI_*`, `GITLAB_*`, and a handful of
//! others) have no static value; their references are left in place
//! symbolically and do not count against `fully_resolved`.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use super::VariableValue;

/// Upper bound on expansion passes; definitions that still change after
/// this many rounds are self-referential and stay partially expanded.
pub const MAX_EXPANSION_PASSES: usize = 10;

/// Predefined variables outside the `CI_` / `GITLAB_` namespaces.
const PREDEFINED_EXTRA: &[&str] = &[
    "CHAT_CHANNEL",
    "CHAT_INPUT",
    "CHAT_USER_ID",
    "TRIGGER_PAYLOAD",
];

/// Whether a variable name is provided by the platform at runtime.
pub fn is_predefined(name: &str) -> bool {
    name.starts_with("CI_") || name.starts_with("GITLAB_") || PREDEFINED_EXTRA.contains(&name)
}

/// Expands `text` against the given scopes (searched in order, first match
/// wins — callers put the innermost scope first).
pub fn expand(text: &str, scopes: &[&IndexMap<String, String>]) -> VariableValue {
    let mut current = text.to_string();
    for _ in 0..MAX_EXPANSION_PASSES {
        let (next, changed) = substitute_once(&current, scopes);
        current = next;
        if !changed {
            break;
        }
    }
    // Anything still referenced that is neither predefined nor waiting as an
    // escaped literal makes the value unresolved: either the variable is
    // undefined or its definition cycles.
    let fully_resolved = references_in(&current)
        .iter()
        .all(|name| is_predefined(name));
    VariableValue {
        raw: text.to_string(),
        expanded: unescape(&current),
        fully_resolved,
    }
}

/// All `$NAME` / `${NAME}` references in `text`, ignoring escaped dollars.
pub fn references_in(text: &str) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    scan(text, |token| {
        if let Token::Reference { name, .. } = token {
            names.insert(name.to_string());
        }
    });
    names
}

/// One substitution pass. Predefined names and unknown names are copied
/// through untouched; `$$` stays opaque until [`unescape`].
fn substitute_once(text: &str, scopes: &[&IndexMap<String, String>]) -> (String, bool) {
    let mut out = String::with_capacity(text.len());
    let mut changed = false;
    scan(text, |token| match token {
        Token::Text(t) => out.push_str(t),
        Token::EscapedDollar => out.push_str("$$"),
        Token::Reference { name, source } => {
            let substitution = (!is_predefined(name))
                .then(|| scopes.iter().find_map(|scope| scope.get(name)))
                .flatten();
            match substitution {
                Some(value) => {
                    out.push_str(value);
                    changed = true;
                }
                None => out.push_str(source),
            }
        }
    });
    (out, changed)
}

/// Replaces `$$` escapes with literal dollars; the final step of expansion.
fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    scan(text, |token| match token {
        Token::Text(t) => out.push_str(t),
        Token::EscapedDollar => out.push('$'),
        Token::Reference { source, .. } => out.push_str(source),
    });
    out
}

enum Token<'a> {
    Text(&'a str),
    EscapedDollar,
    /// A variable reference: the name and the exact source slice
    /// (`$NAME` or `${NAME}`).
    Reference {
        name: &'a str,
        source: &'a str,
    },
}

/// Splits `text` into literal runs, `$$` escapes, and variable references.
/// Dollar signs that do not start a well-formed reference (e.g. `${1:-x}` or
/// a trailing `$`) are literal text, as the runner treats them.
fn scan<'a>(text: &'a str, mut emit: impl FnMut(Token<'a>)) {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut literal_start = 0;
    while let Some(offset) = text[pos..].find('$') {
        let dollar = pos + offset;
        let rest = &bytes[dollar + 1..];
        let (token, consumed) = match rest.first() {
            Some(b'$') => (Some(Token::EscapedDollar), 2),
            Some(b'{') => match braced_name(&text[dollar + 2..]) {
                Some(name) => (
                    Some(Token::Reference {
                        name,
                        source: &text[dollar..dollar + name.len() + 3],
                    }),
                    name.len() + 3,
                ),
                None => (None, 1),
            },
            Some(&c) if is_name_start(c) => {
                let name = plain_name(&text[dollar + 1..]);
                (
                    Some(Token::Reference {
                        name,
                        source: &text[dollar..dollar + name.len() + 1],
                    }),
                    name.len() + 1,
                )
            }
            _ => (None, 1),
        };
        match token {
            Some(token) => {
                if literal_start < dollar {
                    emit(Token::Text(&text[literal_start..dollar]));
                }
                emit(token);
                pos = dollar + consumed;
                literal_start = pos;
            }
            None => {
                pos = dollar + consumed;
            }
        }
    }
    if literal_start < text.len() {
        emit(Token::Text(&text[literal_start..]));
    }
}

fn is_name_start(c: u8) -> bool {
    c == b'_' || c.is_ascii_alphabetic()
}

fn is_name_char(c: u8) -> bool {
    c == b'_' || c.is_ascii_alphanumeric()
}

fn plain_name(text: &str) -> &str {
    let end = text
        .bytes()
        .position(|c| !is_name_char(c))
        .unwrap_or(text.len());
    &text[..end]
}

/// The name inside `${...}` if the braces close over a plain name; shell
/// parameter operations like `${X:-y}` are not references the runner expands.
fn braced_name(text: &str) -> Option<&str> {
    let close = text.find('}')?;
    let name = &text[..close];
    let valid =
        !name.is_empty() && is_name_start(name.as_bytes()[0]) && name.bytes().all(is_name_char);
    valid.then_some(name)
}
