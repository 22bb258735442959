//! Mining paired formal/informal training data from Lean sources.

pub mod config;
pub mod dataset;
pub mod manifest;
pub mod otf;
pub mod parser;
pub mod prompt;
pub mod proofstate;
pub mod rules;
pub mod teacher;
pub mod tokenizer;
