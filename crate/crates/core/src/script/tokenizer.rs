//! Splitting script lines into simple commands.
//!
//! This is deliberately not a full shell parser. It understands enough
//! POSIX-shell surface to extract command words reliably from the scripts
//! that appear in workflow files: quoting, escapes, the usual separators
//! (`&&`, `||`, `|`, `;`, `&`, newline), comments, redirections, leading
//! environment assignments, `sudo`, and control-flow keywords. Command
//! substitutions are tokenized recursively (their commands run too) and
//! leave an opaque placeholder in the enclosing word; anything that forces
//! a guess lowers confidence via a warning instead of failing.

use indexmap::IndexMap;

use crate::location::SourceLocation;
use crate::model::variables::expand;
use crate::model::{JobConfig, ScriptSection};

/// Placeholder for a command substitution's value inside a word.
pub const SUBSTITUTION_PLACEHOLDER: &str = "<subst>";

/// Leading words that wrap a command without being the command.
const STRIP_KEYWORDS: &[&str] = &[
    "if", "then", "else", "elif", "fi", "for", "while", "until", "do", "done", "case", "esac",
    "time", "!", "{", "}", "sudo",
];

/// One word of a command: the text after variable expansion, the raw
/// spelling (re-expandable: single-quoted content has its dollars escaped),
/// and whether the expansion is trustworthy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub text: String,
    pub raw: String,
    pub fully_resolved: bool,
}

/// A simple command: its words, the script section and line it came from,
/// and the raw segment text for evidence.
#[derive(Debug, Clone)]
pub struct SimpleCommand {
    pub words: Vec<Word>,
    pub raw: String,
    pub section: ScriptSection,
    pub location: SourceLocation,
}

impl SimpleCommand {
    pub fn argv(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.text.as_str()).collect()
    }
}

/// All commands of a job with the notes collected while lexing them.
#[derive(Debug, Clone, Default)]
pub struct TokenizedScript {
    pub commands: Vec<SimpleCommand>,
    pub warnings: Vec<String>,
}

/// Tokenizes every script section of a job under its effective variables.
pub fn tokenize_job(job: &JobConfig) -> TokenizedScript {
    let scope = job.raw_variables();
    let mut out = TokenizedScript::default();
    for (line, section) in job.all_script_lines() {
        tokenize_line(&line.text, &scope, section, &line.location, &mut out);
    }
    out
}

/// Tokenizes one script line (which may itself span several physical lines
/// when written as a block scalar).
pub fn tokenize_line(
    text: &str,
    scope: &IndexMap<String, String>,
    section: ScriptSection,
    location: &SourceLocation,
    out: &mut TokenizedScript,
) {
    Lexer {
        scope,
        section,
        location,
        out,
        skip_next_word: false,
    }
    .run(text);
}

/// A raw/expandability run within a word: quoting decides whether variable
/// references inside it are live.
struct Run {
    text: String,
    expand: bool,
}

struct Lexer<'a> {
    scope: &'a IndexMap<String, String>,
    section: ScriptSection,
    location: &'a SourceLocation,
    out: &'a mut TokenizedScript,
    /// Set by a redirection operator: the following word is its target and
    /// never an argument.
    skip_next_word: bool,
}

impl Lexer<'_> {
    fn run(&mut self, text: &str) {
        let mut segment_start = 0;
        let mut runs: Vec<Run> = Vec::new();
        let mut words: Vec<Word> = Vec::new();
        // Substitution bodies seen in the current segment; they execute
        // before the enclosing command does.
        let mut inner: Vec<String> = Vec::new();
        self.skip_next_word = false;

        let bytes = text.as_bytes();
        let mut i = 0;
        macro_rules! end_word {
            () => {
                if !runs.is_empty() {
                    let word = self.finish_word(std::mem::take(&mut runs));
                    if self.skip_next_word {
                        self.skip_next_word = false;
                    } else {
                        words.push(word);
                    }
                }
            };
        }
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b' ' | b'\t' | b'\r' => {
                    end_word!();
                    i += 1;
                }
                b'\n' | b';' | b'&' | b'|' | b'(' | b')' => {
                    end_word!();
                    if c == b'(' || c == b')' {
                        self.warn_once(format!(
                            "{}: subshell grouping; commands inside are analyzed individually",
                            self.location
                        ));
                    }
                    // Consume doubled separators (&&, ||) in one step.
                    i += 1;
                    if (c == b'&' || c == b'|') && bytes.get(i) == Some(&c) {
                        i += 1;
                    }
                    self.emit(&mut words, &text[segment_start..i], &mut inner);
                    self.skip_next_word = false;
                    segment_start = i;
                }
                b'\'' => {
                    let close = text[i + 1..].find('\'').map(|p| i + 1 + p);
                    let end = match close {
                        Some(end) => end,
                        None => {
                            self.warn_once(format!(
                                "{}: unterminated single quote; taking the rest of the line literally",
                                self.location
                            ));
                            text.len()
                        }
                    };
                    runs.push(Run {
                        text: text[i + 1..end].to_string(),
                        expand: false,
                    });
                    i = (end + 1).min(text.len());
                }
                b'"' => {
                    i += 1;
                    let mut content = String::new();
                    let mut closed = false;
                    while i < bytes.len() {
                        match bytes[i] {
                            b'"' => {
                                closed = true;
                                i += 1;
                                break;
                            }
                            b'\\'
                                if i + 1 < bytes.len()
                                    && matches!(bytes[i + 1], b'"' | b'\\' | b'$' | b'`') =>
                            {
                                // Escaped dollars must survive expansion.
                                if bytes[i + 1] == b'$' {
                                    content.push_str("$$");
                                } else {
                                    content.push(bytes[i + 1] as char);
                                }
                                i += 2;
                            }
                            b'$' if bytes.get(i + 1) == Some(&b'(') => {
                                let (body, next) = self.substitution(text, i);
                                inner.push(body);
                                runs.push(Run {
                                    text: std::mem::take(&mut content),
                                    expand: true,
                                });
                                runs.push(Run {
                                    text: SUBSTITUTION_PLACEHOLDER.to_string(),
                                    expand: false,
                                });
                                i = next;
                                continue;
                            }
                            b'`' => {
                                let (body, next) = self.backticks(text, i);
                                inner.push(body);
                                runs.push(Run {
                                    text: std::mem::take(&mut content),
                                    expand: true,
                                });
                                runs.push(Run {
                                    text: SUBSTITUTION_PLACEHOLDER.to_string(),
                                    expand: false,
                                });
                                i = next;
                                continue;
                            }
                            _ => {
                                let ch_len = utf8_len(bytes[i]);
                                content.push_str(&text[i..i + ch_len]);
                                i += ch_len;
                            }
                        }
                    }
                    if !closed {
                        self.warn_once(format!(
                            "{}: unterminated double quote; taking the rest of the line literally",
                            self.location
                        ));
                    }
                    runs.push(Run {
                        text: content,
                        expand: true,
                    });
                }
                b'\\' => {
                    if i + 1 >= bytes.len() || bytes[i + 1] == b'\n' {
                        // Line continuation.
                        i += 2;
                    } else {
                        let ch_len = utf8_len(bytes[i + 1]);
                        runs.push(Run {
                            text: text[i + 1..i + 1 + ch_len].to_string(),
                            expand: false,
                        });
                        i += 1 + ch_len;
                    }
                }
                b'#' if runs.is_empty() => {
                    // A hash at a word boundary starts a comment running to
                    // the end of the physical line.
                    i = text[i..].find('\n').map(|p| i + p).unwrap_or(text.len());
                }
                b'$' if bytes.get(i + 1) == Some(&b'(') => {
                    let (body, next) = self.substitution(text, i);
                    inner.push(body);
                    runs.push(Run {
                        text: SUBSTITUTION_PLACEHOLDER.to_string(),
                        expand: false,
                    });
                    i = next;
                }
                b'`' => {
                    let (body, next) = self.backticks(text, i);
                    inner.push(body);
                    runs.push(Run {
                        text: SUBSTITUTION_PLACEHOLDER.to_string(),
                        expand: false,
                    });
                    i = next;
                }
                b'<' | b'>' => {
                    // Redirection. The file descriptor, if any, is the
                    // current all-digit word; it belongs to the operator.
                    let fd_only = !runs.is_empty()
                        && runs
                            .iter()
                            .all(|r| r.expand && r.text.bytes().all(|b| b.is_ascii_digit()));
                    if fd_only {
                        runs.clear();
                    } else {
                        end_word!();
                    }
                    let mut duplicates_fd = false;
                    while i < bytes.len() && matches!(bytes[i], b'<' | b'>' | b'&' | b'0'..=b'9') {
                        if bytes[i] == b'&' {
                            duplicates_fd = true;
                        }
                        i += 1;
                    }
                    // `2>&1` is complete; `> file` swallows the target word.
                    self.skip_next_word = !duplicates_fd;
                }
                _ => {
                    let ch_len = utf8_len(c);
                    match runs.last_mut() {
                        Some(run) if run.expand => run.text.push_str(&text[i..i + ch_len]),
                        _ => runs.push(Run {
                            text: text[i..i + ch_len].to_string(),
                            expand: true,
                        }),
                    }
                    i += ch_len;
                }
            }
        }
        end_word!();
        self.emit(&mut words, &text[segment_start..], &mut inner);
    }

    /// Reads a `$( ... )` substitution starting at `start` (pointing at the
    /// dollar). Returns the body and the index just past the closing paren.
    fn substitution(&mut self, text: &str, start: usize) -> (String, usize) {
        self.warn_once(format!(
            "{}: command substitution; its result is treated as opaque",
            self.location
        ));
        let bytes = text.as_bytes();
        let mut depth = 0usize;
        let mut i = start + 1; // at '('
        while i < bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        return (text[start + 2..i].to_string(), i + 1);
                    }
                }
                _ => {}
            }
            i += 1;
        }
        self.warn_once(format!(
            "{}: unterminated command substitution",
            self.location
        ));
        (text[start + 2..].to_string(), text.len())
    }

    /// Reads a backtick substitution starting at `start` (at the backtick).
    fn backticks(&mut self, text: &str, start: usize) -> (String, usize) {
        self.warn_once(format!(
            "{}: command substitution; its result is treated as opaque",
            self.location
        ));
        match text[start + 1..].find('`') {
            Some(p) => (
                text[start + 1..start + 1 + p].to_string(),
                start + 1 + p + 1,
            ),
            None => {
                self.warn_once(format!(
                    "{}: unterminated command substitution",
                    self.location
                ));
                (text[start + 1..].to_string(), text.len())
            }
        }
    }

    fn finish_word(&mut self, runs: Vec<Run>) -> Word {
        let mut text = String::new();
        let mut raw = String::new();
        let mut fully_resolved = true;
        for run in runs {
            if run.expand {
                let value = expand(&run.text, &[self.scope]);
                fully_resolved &= value.fully_resolved;
                text.push_str(&value.expanded);
                raw.push_str(&run.text);
            } else {
                if run.text == SUBSTITUTION_PLACEHOLDER {
                    fully_resolved = false;
                }
                text.push_str(&run.text);
                // Keep the raw form re-expandable: literal content must not
                // gain live references.
                raw.push_str(&run.text.replace('$', "$$"));
            }
        }
        Word {
            text,
            raw,
            fully_resolved,
        }
    }

    /// Closes the current segment: first the substitution bodies it
    /// contained (they execute first), then the command itself with wrapper
    /// words stripped.
    fn emit(&mut self, words: &mut Vec<Word>, raw_segment: &str, inner: &mut Vec<String>) {
        for body in inner.drain(..) {
            tokenize_line(&body, self.scope, self.section, self.location, self.out);
        }
        let mut collected = std::mem::take(words);
        let mut start = 0;
        while start < collected.len() {
            let word = &collected[start].text;
            if STRIP_KEYWORDS.contains(&word.as_str()) || is_assignment(word) {
                start += 1;
            } else {
                break;
            }
        }
        collected.drain(..start);
        if collected.is_empty() {
            return;
        }
        let raw = raw_segment
            .trim()
            .trim_end_matches(['&', '|', ';', '(', ')'])
            .trim_start_matches(['(', ')'])
            .trim()
            .to_string();
        self.out.commands.push(SimpleCommand {
            words: collected,
            raw,
            section: self.section,
            location: self.location.clone(),
        });
    }

    fn warn_once(&mut self, message: String) {
        if !self.out.warnings.contains(&message) {
            self.out.warnings.push(message);
        }
    }
}

/// `NAME=...` prefixes that set environment for the command.
fn is_assignment(word: &str) -> bool {
    match word.split_once('=') {
        Some((name, _)) => {
            !name.is_empty()
                && name
                    .bytes()
                    .next()
                    .is_some_and(|b| b == b'_' || b.is_ascii_alphabetic())
                && name.bytes().all(|b| b == b'_' || b.is_ascii_alphanumeric())
        }
        None => false,
    }
}

fn utf8_len(first_byte: u8) -> usize {
    match first_byte {
        b if b < 0x80 => 1,
        b if b >= 0xF0 => 4,
        b if b >= 0xE0 => 3,
        _ => 2,
    }
}
