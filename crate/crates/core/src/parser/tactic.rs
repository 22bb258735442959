use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::extract::TheoremRecord;

/// The ten tactic families recognised by the rule-based informalizer, in
/// matching priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TacticKind {
    Induction,
    Apply,
    Rewrite,
    Reflexivity,
    Cases,
    Introduce,
    Simplification,
    Contradiction,
    Exact,
    Definition,
}

impl TacticKind {
    pub const ALL: [TacticKind; 10] = [
        TacticKind::Induction,
        TacticKind::Apply,
        TacticKind::Rewrite,
        TacticKind::Reflexivity,
        TacticKind::Cases,
        TacticKind::Introduce,
        TacticKind::Simplification,
        TacticKind::Contradiction,
        TacticKind::Exact,
        TacticKind::Definition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Induction => "induction",
            Self::Apply => "apply",
            Self::Rewrite => "rewrite",
            Self::Reflexivity => "reflexivity",
            Self::Cases => "cases",
            Self::Introduce => "introduce",
            Self::Simplification => "simplification",
            Self::Contradiction => "contradiction",
            Self::Exact => "exact",
            Self::Definition => "definition",
        }
    }

    /// The anchored pattern a trimmed line must match for this kind.
    pub fn pattern(self) -> &'static str {
        match self {
            Self::Induction => r"^induction .+ with .+",
            Self::Apply => r"^apply .+",
            Self::Rewrite => r"^rw .+",
            Self::Reflexivity => r"^(?:refl|rfl)$",
            Self::Cases => r"^cases .+",
            Self::Introduce => r"^(?:intro .+|intros .+)",
            Self::Simplification => r"^simp .+",
            Self::Contradiction => r"^contradiction$",
            Self::Exact => r"^exact .+",
            Self::Definition => r"^def .+ := .+",
        }
    }

    /// Slot names captured for this kind, in capture order.
    pub fn slot_names(self) -> &'static [&'static str] {
        match self {
            Self::Induction => &["variable"],
            Self::Apply => &["theorem_name"],
            Self::Rewrite => &["equality_statement"],
            Self::Reflexivity | Self::Contradiction => &[],
            Self::Cases => &["variable_or_condition"],
            Self::Introduce => &["variable_names"],
            Self::Simplification => &["arguments"],
            Self::Exact => &["term_name"],
            Self::Definition => &["function_name", "parameters"],
        }
    }

    pub fn regex(self) -> &'static Regex {
        &PATTERNS[self as usize]
    }
}

impl fmt::Display for TacticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TacticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TacticKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown tactic kind `{s}`"))
    }
}

static PATTERNS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    TacticKind::ALL
        .iter()
        .map(|k| Regex::new(k.pattern()).expect("static pattern"))
        .collect()
});

static INDUCTION_VAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^induction (.+?) with ").expect("static pattern"));
static DEF_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^def (.+?) := ").expect("static pattern"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacticMatch {
    pub kind: TacticKind,
    pub raw_line: String,
    pub slots: Vec<(String, String)>,
}

impl TacticMatch {
    pub fn slot(&self, name: &str) -> Option<&str> {
        self.slots
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

/// Classify one proof line. Returns the first kind (in [`TacticKind::ALL`]
/// order) whose pattern matches the trimmed line.
pub fn classify_tactic(line: &str) -> Option<TacticMatch> {
    let line = line.trim();
    let kind = TacticKind::ALL.into_iter().find(|k| k.regex().is_match(line))?;
    Some(TacticMatch {
        kind,
        raw_line: line.to_string(),
        slots: capture_slots(kind, line),
    })
}

fn capture_slots(kind: TacticKind, line: &str) -> Vec<(String, String)> {
    let after = |prefix: &str| line[prefix.len()..].trim().to_string();
    let values: Vec<String> = match kind {
        TacticKind::Induction => {
            let caps = INDUCTION_VAR.captures(line).expect("pattern matched");
            vec![caps[1].trim().to_string()]
        }
        TacticKind::Apply => vec![after("apply ")],
        TacticKind::Rewrite => vec![after("rw ")],
        TacticKind::Cases => vec![after("cases ")],
        TacticKind::Introduce => {
            let prefix = if line.starts_with("intros ") { "intros " } else { "intro " };
            vec![after(prefix)]
        }
        TacticKind::Simplification => vec![after("simp ")],
        TacticKind::Exact => vec![after("exact ")],
        TacticKind::Definition => {
            let header = DEF_HEADER
                .captures(line)
                .map(|c| c[1].to_string())
                .unwrap_or_default();
            let name = header
                .split(|c: char| c.is_whitespace() || matches!(c, '(' | '{' | '[' | ':'))
                .next()
                .unwrap_or("")
                .to_string();
            let groups = bracket_groups(&header);
            let params = if groups.is_empty() {
                "no parameters".to_string()
            } else {
                groups.join(", ")
            };
            vec![name, params]
        }
        TacticKind::Reflexivity | TacticKind::Contradiction => vec![],
    };
    kind.slot_names()
        .iter()
        .map(|s| s.to_string())
        .zip(values)
        .collect()
}

/// Top-level `(...)`, `{...}` and `[...]` groups of a definition header.
fn bracket_groups(header: &str) -> Vec<String> {
    let mut groups = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in header.char_indices() {
        match c {
            '(' | '{' | '[' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            ')' | '}' | ']' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    groups.push(header[start..=i].to_string());
                }
            }
            _ => {}
        }
    }
    groups
}

/// Classification of a whole proof body.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedProof {
    pub matches: Vec<TacticMatch>,
    /// Number of non-empty tactic fragments considered.
    pub fragments: usize,
}

impl ClassifiedProof {
    pub fn coverage(&self) -> f64 {
        if self.fragments == 0 {
            0.0
        } else {
            self.matches.len() as f64 / self.fragments as f64
        }
    }
}

pub fn classify_proof(record: &TheoremRecord) -> ClassifiedProof {
    let fragments = split_tactic_fragments(&record.proof_body);
    ClassifiedProof {
        matches: fragments.iter().filter_map(|f| classify_tactic(f)).collect(),
        fragments: fragments.len(),
    }
}

/// Split a proof body into tactic fragments.
///
/// Breaks on newlines and `;` at bracket depth 0 (never inside `<;>`),
/// drops `--` comments, a leading `by`, and `·` focus bullets. A fragment
/// that spans lines inside brackets is joined with single spaces.
pub fn split_tactic_fragments(body: &str) -> Vec<String> {
    let body = body.trim_start();
    let body = match body.strip_prefix("by") {
        Some(rest) if rest.is_empty() || rest.starts_with(char::is_whitespace) => rest,
        _ => body,
    };

    let mut fragments = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
        let mut in_comment = false;
    for (i, c) in body.char_indices() {
        if in_comment {
            if c == '\n' {
                in_comment = false;
            } else {
                continue;
            }
        }
        match c {
            '-' if body[i..].starts_with("--") => {
                in_comment = true;
                continue;
            }
            '(' | '[' | '{' | '⟨' => depth += 1,
            ')' | ']' | '}' | '⟩' => depth = depth.saturating_sub(1),
            ';' if depth == 0 && !body[..i].ends_with('<') => {
                push_fragment(&mut fragments, &current);
                current.clear();
                continue;
            }
            '\n' if depth == 0 => {
                push_fragment(&mut fragments, &current);
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    push_fragment(&mut fragments, &current);
    fragments
}

fn push_fragment(out: &mut Vec<String>, raw: &str) {
    let mut text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    while let Some(rest) = text.strip_prefix('·').or_else(|| text.strip_prefix(". ")) {
        text = rest.trim_start().to_string();
    }
    if !text.is_empty() {
        out.push(text);
    }
}
