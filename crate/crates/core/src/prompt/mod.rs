//! Teacher prompts: the six-shot full-proof prompt and the zero-shot
//! per-tactic prompt, plus the tuple format answers are parsed from.

mod tuple;

use std::fmt::Write as _;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::TheoremRecord;
use crate::proofstate::{normalize_state, ProofStateTuple};

pub use tuple::{escape_element, parse_teacher_response, render_tuple, unescape_element, TeacherFormatError};

/// Number of examples the full-proof prompt is built around.
pub const FULL_PROOF_SHOTS: usize = 6;

/// Instruction preceding the example list. The trailing `\n` is literal text
/// followed by a real newline, as in the reference prompt.
pub const FULL_PROOF_INSTRUCTION: &str = "At the end of this explanation, I will give you 2 things. The first is a list of tuples that are the translations of entire proofs written in Lean, which we will denote the formal language, to plain English, also known as natural language, as tuples or pairs. This is not an exhaustive list, these are just examples of informalizations. I will then have a proof written in Lean represented as a string following the newline character after the list of pairs. Give me the tuple pair of the proof I give you written in Lean and what you think their natural language equivalent is given your knowledge of Lean, formatted using LaTeX. Do not output anything else, just the python tuple I requested. In your output match the exact format \"('formal', 'informal')\" \\n";

/// Closing line of the per-tactic prompt.
pub const TACTIC_INSTRUCTION: &str = "Explain in one sentence of plain English what the tactic above does to the proof state, formatted using LaTeX, and reply with only the python tuple \"('formal', 'informal')\" where formal is the tactic.";

/// Appended to a prompt when the first answer could not be parsed.
pub const FORMAT_REMINDER: &str = "\n\nRemember: match the exact format \"('formal', 'informal')\" and output nothing else.";

static DEFAULT_SHOTS: LazyLock<Vec<Shot>> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../fixtures/default_shots.json")).expect("bundled shot fixture is valid")
});

/// One labelled `(formal, informal)` example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot(pub String, pub String);

/// The six bundled example pairs.
pub fn default_shots() -> &'static [Shot] {
    &DEFAULT_SHOTS
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("full-proof prompt needs exactly {FULL_PROOF_SHOTS} shots, got {0}")]
    ShotCount(usize),
    #[error("tactic prompt takes no shots, got {0}")]
    UnexpectedShots(usize),
    #[error("tactic text is empty")]
    EmptyTactic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    FullProof6Shot,
    Tactic0Shot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PromptTarget {
    Theorem(TheoremRecord),
    Tactic { tuple: ProofStateTuple, statement: String },
}

/// A request to the teacher before rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub mode: PromptMode,
    pub shots: Vec<Shot>,
    pub target: PromptTarget,
}

/// Rendered prompt text plus metadata about the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    /// The tactic left the goal state unchanged.
    pub no_progress: bool,
}

impl PromptSpec {
    pub fn full_proof(target: TheoremRecord) -> Self {
        Self {
            mode: PromptMode::FullProof6Shot,
            shots: default_shots().to_vec(),
            target: PromptTarget::Theorem(target),
        }
    }

    pub fn tactic(tuple: ProofStateTuple, statement: impl Into<String>) -> Self {
        Self {
            mode: PromptMode::Tactic0Shot,
            shots: Vec::new(),
            target: PromptTarget::Tactic {
                tuple,
                statement: statement.into(),
            },
        }
    }

    /// Formal side of the pair this prompt asks for.
    pub fn formal(&self) -> String {
        match &self.target {
            PromptTarget::Theorem(t) => t.formal_text(),
            PromptTarget::Tactic { tuple, .. } => tuple.tactic.clone(),
        }
    }

    /// Identifier of the theorem the prompt is about.
    pub fn source(&self) -> &str {
        match &self.target {
            PromptTarget::Theorem(t) => &t.id,
            PromptTarget::Tactic { tuple, .. } => &tuple.theorem_id,
        }
    }

    pub fn render(&self) -> Result<RenderedPrompt, PromptError> {
        match (&self.mode, &self.target) {
            (PromptMode::FullProof6Shot, PromptTarget::Theorem(t)) => Ok(RenderedPrompt {
                text: build_full_proof_prompt(t, &self.shots)?,
                no_progress: false,
            }),
            (PromptMode::Tactic0Shot, PromptTarget::Tactic { tuple, statement }) => {
                if !self.shots.is_empty() {
                    return Err(PromptError::UnexpectedShots(self.shots.len()));
                }
                Ok(RenderedPrompt {
                    text: build_tactic_prompt(tuple, statement)?,
                    no_progress: tuple.is_no_progress(),
                })
            }
            (PromptMode::FullProof6Shot, PromptTarget::Tactic { .. }) => Err(PromptError::ShotCount(self.shots.len())),
            (PromptMode::Tactic0Shot, PromptTarget::Theorem(_)) => Err(PromptError::EmptyTactic),
        }
    }
}

/// Six-shot prompt asking the teacher to informalize a whole proof.
///
/// Layout: the instruction, a newline, the shots as a bracketed list of
/// double-quoted tuples one per line, a newline, then the target's formal
/// text escaped so it stays on one line.
pub fn build_full_proof_prompt(target: &TheoremRecord, shots: &[Shot]) -> Result<String, PromptError> {
    if shots.len() != FULL_PROOF_SHOTS {
        return Err(PromptError::ShotCount(shots.len()));
    }
    let mut out = String::with_capacity(4096);
    out.push_str(FULL_PROOF_INSTRUCTION);
    out.push_str("\n[");
    for (i, Shot(formal, informal)) in shots.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        let _ = write!(
            out,
            "(\"{}\", \"{}\")",
            escape_element(formal, '"'),
            escape_element(informal, '"')
        );
    }
    out.push_str("]\n");
    out.push_str(&escape_element(&target.formal_text(), '\''));
    Ok(out)
}

/// Zero-shot prompt for one `(state before, tactic, state after)` step.
pub fn build_tactic_prompt(t: &ProofStateTuple, theorem_statement: &str) -> Result<String, PromptError> {
    if t.tactic.trim().is_empty() {
        return Err(PromptError::EmptyTactic);
    }
    Ok(format!(
        "THEOREM:\n{}\n\nSTATE BEFORE:\n{}\n\nTACTIC:\n{}\n\nSTATE AFTER:\n{}\n\n{}",
        theorem_statement.trim(),
        normalize_state(&t.state_before),
        t.tactic.trim(),
        normalize_state(&t.state_after),
        TACTIC_INSTRUCTION
    ))
}
