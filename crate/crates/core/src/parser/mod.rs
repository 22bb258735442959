//! Lean source mining: declaration extraction and tactic-line classification.
//!
//! Extraction is regex/lexer based and deliberately shallow. It knows about
//! comments, string literals and bracket depth, nothing else.

mod ascii;
mod extract;
mod tactic;

pub use ascii::ascii_fold;
pub use extract::{
    extract_theorems, extract_theorems_with, keyword_counts, DeclKeyword, ExtractOptions,
    ExtractWarning, Extraction, TheoremRecord, WarningKind,
};
pub use tactic::{
    classify_proof, classify_tactic, split_tactic_fragments, ClassifiedProof, TacticKind,
    TacticMatch,
};
