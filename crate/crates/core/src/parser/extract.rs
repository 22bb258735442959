use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ascii::ascii_fold;

/// One mined declaration.
///
/// `statement` runs from the declaration keyword up to (not including) the
/// first top-level `:=`; `proof_body` is everything after it. Line numbers
/// are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub id: String,
    pub name: String,
    pub statement: String,
    pub proof_body: String,
    pub source_file: String,
    pub line_start: usize,
    pub line_end: usize,
}

impl TheoremRecord {
    pub fn line_span(&self) -> (usize, usize) {
        (self.line_start, self.line_end)
    }

    /// The declaration keyword, read back from the statement.
    pub fn keyword(&self) -> Option<DeclKeyword> {
        self.statement
            .split_whitespace()
            .next()
            .and_then(DeclKeyword::from_word)
    }

    /// Full formal text as it is shown to a teacher model.
    pub fn formal_text(&self) -> String {
        if self.proof_body.is_empty() {
            format!("{} :=", self.statement)
        } else {
            format!("{} := {}", self.statement, self.proof_body)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclKeyword {
    Theorem,
    Lemma,
    Def,
}

impl DeclKeyword {
    pub fn from_word(word: &str) -> Option<Self> {
        match word {
            "theorem" => Some(Self::Theorem),
            "lemma" => Some(Self::Lemma),
            "def" => Some(Self::Def),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Theorem => "theorem",
            Self::Lemma => "lemma",
            Self::Def => "def",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// Header never reached a top-level `:=` before the declaration ended.
    UnbalancedDeclaration,
    /// Brackets were still open when the declaration ended.
    UnclosedBracket,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractWarning {
    pub kind: WarningKind,
    pub source_file: String,
    pub line: usize,
    pub name: String,
    pub message: String,
}

impl fmt::Display for ExtractWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {} ({})", self.source_file, self.line, self.message, self.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub records: Vec<TheoremRecord>,
    pub warnings: Vec<ExtractWarning>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractOptions {
    /// Transliterate statement and proof text to ASCII.
    pub ascii_fold: bool,
}

/// Extract every top-level `theorem`, `lemma` and `def` from `source_text`.
pub fn extract_theorems(source_text: &str, source_file: &str) -> Extraction {
    extract_theorems_with(source_text, source_file, ExtractOptions::default())
}

pub fn extract_theorems_with(
    source_text: &str,
    source_file: &str,
    opts: ExtractOptions,
) -> Extraction {
    let masked = mask_non_code(source_text);
    let lines = line_table(source_text, &masked);

    let commands: Vec<usize> = (0..lines.len())
        .filter(|&i| lines[i].is_command(source_text, &masked))
        .collect();

    let mut out = Extraction::default();
    for (ci, &li) in commands.iter().enumerate() {
        let Some(kw_offset) = lines[li].decl_keyword_offset(&masked) else {
            continue;
        };
        let next_command = commands.get(ci + 1).copied().unwrap_or(lines.len());
        // Trailing blank or comment-only lines belong to nobody.
        let mut last = next_command - 1;
        while last > li && masked[lines[last].start..lines[last].end].trim().is_empty() {
            last -= 1;
        }
        let span_end = lines[last].end;
        let header = &masked[kw_offset..span_end];
        let name = decl_name(&source_text[kw_offset..span_end]);

        match split_header(header) {
            Split::Found { assign, body, depth: 0 } => {
                let statement = source_text[kw_offset..kw_offset + assign].trim();
                let proof_body = source_text[kw_offset + body..span_end].trim();
                let (statement, proof_body) = if opts.ascii_fold {
                    (ascii_fold(statement), ascii_fold(proof_body))
                } else {
                    (statement.to_string(), proof_body.to_string())
                };
                out.records.push(TheoremRecord {
                    id: format!("{}:{}:{}", source_file, li + 1, name),
                    name,
                    statement,
                    proof_body,
                    source_file: source_file.to_string(),
                    line_start: li + 1,
                    line_end: last + 1,
                });
            }
            Split::Found { .. } => out.warnings.push(ExtractWarning {
                kind: WarningKind::UnclosedBracket,
                source_file: source_file.to_string(),
                line: li + 1,
                name,
                message: "declaration ends with unclosed brackets".into(),
            }),
            Split::Missing => out.warnings.push(ExtractWarning {
                kind: WarningKind::UnbalancedDeclaration,
                source_file: source_file.to_string(),
                line: li + 1,
                name,
                message: "declaration header has no top-level `:=` before it ends".into(),
            }),
        }
    }
    out
}

/// Count records per declaration keyword.
pub fn keyword_counts(records: &[TheoremRecord]) -> BTreeMap<&'static str, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        if let Some(k) = r.keyword() {
            *counts.entry(k.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

const DECL_KEYWORDS: &[&str] = &["theorem", "lemma", "def"];

const OTHER_COMMANDS: &[&str] = &[
    "instance", "example", "abbrev", "structure", "class", "inductive", "namespace",
    "section", "end", "open", "variable", "universe", "set_option", "attribute",
    "import", "macro", "macro_rules", "syntax", "notation", "infix", "infixl", "infixr",
    "prefix", "postfix", "elab", "axiom", "opaque", "mutual", "initialize", "alias",
    "add_decl_doc", "export", "deriving", "local",
];

const MODIFIERS: &[&str] = &[
    "private", "protected", "noncomputable", "nonrec", "partial", "unsafe", "scoped",
];

#[derive(Debug)]
struct Line {
    start: usize,
    end: usize,
    depth_at_start: u32,
    in_comment_at_start: bool,
}

impl Line {
    fn is_command(&self, raw: &str, masked: &str) -> bool {
        if self.depth_at_start != 0 || self.in_comment_at_start {
            return false;
        }
        let raw_line = raw[self.start..self.end].trim_start();
        if raw_line.starts_with("/--") || raw_line.starts_with("/-!") || raw_line.starts_with("@[")
        {
            return true;
        }
        if raw_line.starts_with('#') {
            return true;
        }
        let code = &masked[self.start..self.end];
        match first_word_after_modifiers(code) {
            Some((w, _)) => DECL_KEYWORDS.contains(&w) || OTHER_COMMANDS.contains(&w),
            None => false,
        }
    }

    fn decl_keyword_offset(&self, masked: &str) -> Option<usize> {
        let code = &masked[self.start..self.end];
        let (w, off) = first_word_after_modifiers(code)?;
        DECL_KEYWORDS.contains(&w).then_some(self.start + off)
    }
}

/// First word of a code line after `@[...]` attributes and declaration modifiers.
fn first_word_after_modifiers(code: &str) -> Option<(&str, usize)> {
    let mut pos = 0;
    loop {
        let rest = &code[pos..];
        let trimmed = rest.trim_start();
        pos += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return None;
        }
        if trimmed.starts_with("@[") {
            let close = matching_bracket(trimmed)?;
            pos += close + 1;
            continue;
        }
        let word_len = trimmed
            .find(|c: char| c.is_whitespace())
            .unwrap_or(trimmed.len());
        let word = &trimmed[..word_len];
        if MODIFIERS.contains(&word) {
            pos += word_len;
            continue;
        }
        return Some((word, pos));
    }
}

fn matching_bracket(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' | '{' => depth += 1,
            ']' | ')' | '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn decl_name(decl: &str) -> String {
    let mut words = decl.split_whitespace();
    words.next();
    words
        .next()
        .map(|w| {
            w.split(['(', '{', '[', ':', '⦃'])
                .next()
                .unwrap_or("")
                .to_string()
        })
        .unwrap_or_default()
}

enum Split {
    /// `assign` is where the header ends, `body` where the proof starts.
    Found { assign: usize, body: usize, depth: u32 },
    Missing,
}

/// Locate the first depth-0 `:=` in a masked declaration, or a line that opens
/// with `|` (equation-compiler style definitions).
fn split_header(masked: &str) -> Split {
    let bytes = masked.as_bytes();
    let mut depth: u32 = 0;
    let mut found: Option<(usize, usize)> = None;
    let mut line_start = true;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth = depth.saturating_sub(1),
            b'\n' => {
                line_start = true;
                i += 1;
                continue;
            }
            b':' if found.is_none() && depth == 0 && bytes.get(i + 1) == Some(&b'=') => {
                found = Some((i, i + 2));
                i += 2;
                line_start = false;
                continue;
            }
            b'|' if found.is_none() && depth == 0 && line_start => {
                found = Some((i, i));
            }
            _ => {}
        }
        if !b.is_ascii_whitespace() {
            line_start = false;
        }
        i += 1;
    }
    match found {
        Some((assign, body)) => Split::Found { assign, body, depth },
        None => Split::Missing,
    }
}

fn line_table(raw: &str, masked: &str) -> Vec<Line> {
    let comment_state = comment_state_at_line_starts(raw);
    let mut lines = Vec::new();
    let mut depth: u32 = 0;
    let mut start = 0;
    for (idx, segment) in masked.split('\n').enumerate() {
        let end = start + segment.len();
        lines.push(Line {
            start,
            end,
            depth_at_start: depth,
            in_comment_at_start: comment_state[idx],
        });
        for b in segment.bytes() {
            match b {
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' | b'}' => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
        start = end + 1;
    }
    // A trailing newline produces one empty phantom line.
    if raw.ends_with('\n') {
        lines.pop();
    }
    lines
}

#[derive(Clone, Copy, PartialEq)]
enum LexState {
    Code,
    LineComment,
    BlockComment(u32),
    Str,
}

/// Replace comments and string/char literals with spaces, byte for byte, so
/// offsets in the masked text line up with the original.
fn mask_non_code(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut state = LexState::Code;
    let mut prev: Option<char> = None;
    let mut iter = src.char_indices().peekable();
    let blank = |out: &mut String, c: char| {
        if c == '\n' {
            out.push('\n');
        } else {
            for _ in 0..c.len_utf8() {
                out.push(' ');
            }
        }
    };
    while let Some((i, c)) = iter.next() {
        let rest = &src[i..];
        match state {
            LexState::Code => {
                if rest.starts_with("--") {
                    state = LexState::LineComment;
                    blank(&mut out, c);
                } else if rest.starts_with("/-") {
                    state = LexState::BlockComment(1);
                    blank(&mut out, c);
                    let (_, d) = iter.next().expect("two-byte token");
                    blank(&mut out, d);
                } else if c == '"' {
                    state = LexState::Str;
                    blank(&mut out, c);
                } else if c == '\'' && !prev.is_some_and(is_ident_char) {
                    if let Some(len) = char_literal_len(rest) {
                        for _ in 0..len {
                            out.push(' ');
                        }
                        while iter.peek().is_some_and(|&(j, _)| j < i + len) {
                            iter.next();
                        }
                        prev = Some('\'');
                        continue;
                    }
                    out.push(c);
                } else {
                    out.push(c);
                }
            }
            LexState::LineComment => {
                if c == '\n' {
                    state = LexState::Code;
                }
                blank(&mut out, c);
            }
            LexState::BlockComment(depth) => {
                if rest.starts_with("/-") {
                    state = LexState::BlockComment(depth + 1);
                    blank(&mut out, c);
                    let (_, d) = iter.next().expect("two-byte token");
                    blank(&mut out, d);
                } else if rest.starts_with("-/") {
                    state = if depth == 1 {
                        LexState::Code
                    } else {
                        LexState::BlockComment(depth - 1)
                    };
                    blank(&mut out, c);
                    let (_, d) = iter.next().expect("two-byte token");
                    blank(&mut out, d);
                } else {
                    blank(&mut out, c);
                }
            }
            LexState::Str => {
                if c == '\\' {
                    blank(&mut out, c);
                    if let Some((_, d)) = iter.next() {
                        blank(&mut out, d);
                    }
                } else {
                    if c == '"' {
                        state = LexState::Code;
                    }
                    blank(&mut out, c);
                }
            }
        }
        prev = Some(c);
    }
    debug_assert_eq!(out.len(), src.len());
    out
}

/// Byte length of a Lean char literal (`'a'`, `'\n'`) at the start of `s`.
fn char_literal_len(s: &str) -> Option<usize> {
    let mut chars = s.char_indices().skip(1);
    let (_, c) = chars.next()?;
    if c == '\\' {
        let (_, _) = chars.next()?;
    } else if c == '\'' || c == '\n' {
        return None;
    }
    let (j, close) = chars.next()?;
    (close == '\'').then_some(j + 1)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '.' || ('₀'..='₉').contains(&c)
}

/// Whether each line starts inside a block comment or string literal.
fn comment_state_at_line_starts(src: &str) -> Vec<bool> {
    let mut states = vec![false];
    let mut state = LexState::Code;
    let mut iter = src.char_indices();
    while let Some((i, c)) = iter.next() {
        let rest = &src[i..];
        match state {
            LexState::Code | LexState::LineComment if c == '\n' => {
                state = LexState::Code;
            }
            LexState::Code => {
                if rest.starts_with("--") {
                    state = LexState::LineComment;
                } else if rest.starts_with("/-") {
                    state = LexState::BlockComment(1);
                    iter.next();
                } else if c == '"' {
                    state = LexState::Str;
                }
            }
            LexState::LineComment => {}
            LexState::BlockComment(depth) => {
                if rest.starts_with("/-") {
                    state = LexState::BlockComment(depth + 1);
                    iter.next();
                } else if rest.starts_with("-/") {
                    state = if depth == 1 {
                        LexState::Code
                    } else {
                        LexState::BlockComment(depth - 1)
                    };
                    iter.next();
                }
            }
            LexState::Str => {
                if c == '\\' {
                    iter.next();
                } else if c == '"' {
                    state = LexState::Code;
                }
            }
        }
        if c == '\n' {
            states.push(matches!(state, LexState::BlockComment(_) | LexState::Str));
        }
    }
    states
}
