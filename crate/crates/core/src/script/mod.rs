//! Shell-level analysis of job scripts: a small quote-aware tokenizer that
//! splits script lines into simple commands, and a classifier that
//! recognizes the package-manager and container commands detection cares
//! about.

pub mod classify;
pub mod tokenizer;

pub use classify::{classify, CommandClass};
pub use tokenizer::{tokenize_job, SimpleCommand, TokenizedScript, Word};
