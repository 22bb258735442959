//! Proof-state exports: one `(state before, tactic, state after)` tuple per
//! tactic, and alignment of informal proof lines back onto tactics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Method, PairRecord};

/// Canonical form of a state with no goals left.
pub const CLOSED_MARKER: &str = "goals accomplished";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStateTuple {
    pub theorem_id: String,
    pub index: usize,
    pub state_before: String,
    pub tactic: String,
    pub state_after: String,
}

impl ProofStateTuple {
    /// The tactic did not change the goal state.
    pub fn is_no_progress(&self) -> bool {
        normalize_state(&self.state_before) == normalize_state(&self.state_after)
    }
}

/// Trim a goal state and map the closed-goal spellings to [`CLOSED_MARKER`].
pub fn normalize_state(state: &str) -> &str {
    let s = state.trim();
    if s.is_empty() || s == CLOSED_MARKER || s == "no goals" {
        CLOSED_MARKER
    } else {
        s
    }
}

#[derive(Debug, Error)]
pub enum ProofStateError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateWarning {
    /// `state_after[index]` differs from `state_before[index + 1]`.
    ChainBreak { theorem_id: String, index: usize },
    /// Indices of a theorem are not `0..n`.
    IndexGap { theorem_id: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedStates {
    /// Grouped by theorem (first appearance order), sorted by index within.
    pub tuples: Vec<ProofStateTuple>,
    pub warnings: Vec<StateWarning>,
}

impl LoadedStates {
    /// Tuples of each theorem, keyed by theorem id.
    pub fn by_theorem(&self) -> BTreeMap<&str, Vec<&ProofStateTuple>> {
        let mut out: BTreeMap<&str, Vec<&ProofStateTuple>> = BTreeMap::new();
        for t in &self.tuples {
            out.entry(t.theorem_id.as_str()).or_default().push(t);
        }
        out
    }

    /// Keep only the listed theorems.
    pub fn retain_theorems(&mut self, allow: &BTreeSet<String>) {
        self.tuples.retain(|t| allow.contains(&t.theorem_id));
        self.warnings.retain(|w| match w {
            StateWarning::ChainBreak { theorem_id, .. } | StateWarning::IndexGap { theorem_id, .. } => {
                allow.contains(theorem_id)
            }
        });
    }
}

pub fn load_states(path: &Path) -> Result<LoadedStates, ProofStateError> {
    let text = fs::read_to_string(path).map_err(|source| ProofStateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_states(&text)
}

/// Parse proof-state JSON Lines. Chain and index problems become warnings;
/// the tuples themselves are never modified.
pub fn parse_states(text: &str) -> Result<LoadedStates, ProofStateError> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<ProofStateTuple>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: ProofStateTuple = serde_json::from_str(line).map_err(|e| ProofStateError::Schema {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !groups.contains_key(&t.theorem_id) {
            order.push(t.theorem_id.clone());
        }
        groups.entry(t.theorem_id.clone()).or_default().push(t);
    }

    let mut out = LoadedStates::default();
    for id in order {
        let mut g = groups.remove(&id).unwrap_or_default();
        g.sort_by_key(|t| t.index);
        for (expected, t) in g.iter().enumerate() {
            if t.index != expected {
                out.warnings.push(StateWarning::IndexGap {
                    theorem_id: id.clone(),
                    expected,
                    found: t.index,
                });
                break;
            }
        }
        for w in g.windows(2) {
            if normalize_state(&w[0].state_after) != normalize_state(&w[1].state_before) {
                out.warnings.push(StateWarning::ChainBreak {
                    theorem_id: id.clone(),
                    index: w[0].index,
                });
            }
        }
        out.tuples.extend(g);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMethod {
    Numbered,
    Proportional,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedTactic {
    #[serde(flatten)]
    pub tuple: ProofStateTuple,
    pub informal_line: String,
    pub alignment_method: AlignmentMethod,
}

impl AlignedTactic {
    pub fn to_pair(&self) -> PairRecord {
        PairRecord::new(
            self.tuple.tactic.trim(),
            self.informal_line.clone(),
            Method::IndividualTactics,
            self.tuple.theorem_id.clone(),
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("informal proof contains no sentences")]
pub struct EmptyInformalError;

/// Pair each tactic with a line of an informal proof.
///
/// Numbered items `1.` .. `T.` are used when exactly one per tactic is
/// present; otherwise tactic `i` gets sentence `floor(i * S / T)`.
pub fn align_tactics_to_lines(
    tuples: &[ProofStateTuple],
    informal_proof: &str,
) -> Result<Vec<AlignedTactic>, EmptyInformalError> {
    let sentences = split_sentences(informal_proof);
    if sentences.is_empty() {
        return Err(EmptyInformalError);
    }
    if let Some(items) = numbered_items(informal_proof, tuples.len()) {
        return Ok(tuples
            .iter()
            .zip(items)
            .map(|(t, line)| AlignedTactic {
                tuple: t.clone(),
                informal_line: line,
                alignment_method: AlignmentMethod::Numbered,
            })
            .collect());
    }
    let (s, n) = (sentences.len(), tuples.len());
    Ok(tuples
        .iter()
        .enumerate()
        .map(|(i, t)| AlignedTactic {
            tuple: t.clone(),
            informal_line: sentences[i * s / n].clone(),
            alignment_method: AlignmentMethod::Proportional,
        })
        .collect())
}

static NUMBER_MARK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:^|\s)(\d+)\.(?:\s|$)").expect("valid regex"));

/// Items `1.` through `count.` in order, if the text numbers exactly that many.
fn numbered_items(text: &str, count: usize) -> Option<Vec<String>> {
    if count == 0 {
        return None;
    }
    // (number, start of marker, start of item text)
    let mut marks: Vec<(usize, usize, usize)> = Vec::new();
    let mut next = 1;
    for c in NUMBER_MARK.captures_iter(text) {
        let n: usize = c[1].parse().ok()?;
        if n == next {
            let whole = c.get(0).expect("match");
            marks.push((n, c.get(1).expect("group").start(), whole.end()));
            next += 1;
        }
    }
    if marks.len() != count || !text[..marks[0].1].trim().is_empty() {
        return None;
    }
    let mut items = Vec::with_capacity(count);
    for (k, &(_, _, start)) in marks.iter().enumerate() {
        let end = marks.get(k + 1).map_or(text.len(), |m| m.1);
        let item = text[start..end].split_whitespace().collect::<Vec<_>>().join(" ");
        if item.is_empty() {
            return None;
        }
        items.push(item);
    }
    Some(items)
}

/// Split on `.`, `!` or `?` followed by whitespace or end of text, never
/// inside `$...$` math.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut in_math = false;
    let mut chars = text.chars().peekable();
    let mut prev_backslash = false;
    while let Some(c) = chars.next() {
        current.push(c);
        if c == '$' && !prev_backslash {
            in_math = !in_math;
        }
        prev_backslash = c == '\\' && !prev_backslash;
        if !in_math && matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            push_sentence(&mut out, &mut current);
        }
    }
    push_sentence(&mut out, &mut current);
    out
}

fn push_sentence(out: &mut Vec<String>, current: &mut String) {
    let s = current.split_whitespace().collect::<Vec<_>>().join(" ");
    if !s.is_empty() {
        out.push(s);
    }
    current.clear();
}
