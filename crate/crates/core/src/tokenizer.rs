//! Byte-level BPE token counting.
//!
//! The tokenizer is defined entirely by two files:
//!
//! * `vocab.json`: a JSON object mapping token string to integer id. Token
//!   strings use the GPT-2 byte-to-unicode alphabet, and all 256 byte symbols
//!   must be present.
//! * `merges.txt`: one merge per line, the two symbols separated by a single
//!   space, highest priority first. An optional first line starting with
//!   `#version` is skipped, as are empty lines.
//!
//! Text is pre-split with the GPT-2 pattern, each piece is mapped byte-wise
//! onto the symbol alphabet, and merges are applied lowest rank first.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use fancy_regex::Regex;
use thiserror::Error;

const GPT2_PATTERN: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

const REFERENCE_VOCAB: &str = include_str!("../fixtures/ref_tokenizer/vocab.json");
const REFERENCE_MERGES: &str = include_str!("../fixtures/ref_tokenizer/merges.txt");

static REFERENCE: LazyLock<Tokenizer> = LazyLock::new(|| {
    Tokenizer::from_strs(REFERENCE_VOCAB, REFERENCE_MERGES).expect("bundled tokenizer is valid")
});

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid vocab: {0}")]
    Vocab(String),
    #[error("invalid merges line {line}: {reason}")]
    Merges { line: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
    byte_symbols: Vec<String>,
    pattern: Regex,
}

impl Tokenizer {
    /// The small reference vocabulary bundled with the crate.
    pub fn reference() -> &'static Tokenizer {
        &REFERENCE
    }

    pub fn from_files(vocab: &Path, merges: &Path) -> Result<Self, TokenizerError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| TokenizerError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        Self::from_strs(&read(vocab)?, &read(merges)?)
    }

    pub fn from_strs(vocab_json: &str, merges_txt: &str) -> Result<Self, TokenizerError> {
        let vocab: HashMap<String, u32> =
            serde_json::from_str(vocab_json).map_err(|e| TokenizerError::Vocab(e.to_string()))?;
        let byte_symbols = byte_symbols();
        if let Some(missing) = byte_symbols.iter().find(|s| !vocab.contains_key(*s)) {
            return Err(TokenizerError::Vocab(format!(
                "byte symbol {missing:?} is missing from the vocabulary"
            )));
        }

        let mut ranks = HashMap::new();
        for (idx, line) in merges_txt.lines().enumerate() {
            if line.is_empty() || (idx == 0 && line.starts_with("#version")) {
                continue;
            }
            let err = |reason: &str| TokenizerError::Merges {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split(' ');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected exactly two space-separated symbols"));
            };
            if a.is_empty() || b.is_empty() {
                return Err(err("empty symbol"));
            }
            if !vocab.contains_key(&format!("{a}{b}")) {
                return Err(err("merged symbol is not in the vocabulary"));
            }
            let rank = ranks.len();
            ranks.entry((a.to_string(), b.to_string())).or_insert(rank);
        }

        Ok(Self {
            vocab,
            ranks,
            byte_symbols,
            pattern: Regex::new(GPT2_PATTERN).expect("static pattern"),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Token strings for `text`.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for piece in self.pattern.find_iter(text) {
            // Only a single-char lookahead; the backtrack limit cannot be hit.
            let piece = piece.expect("pre-tokenizer pattern");
            out.extend(self.bpe(piece.as_str()));
        }
        out
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        self.tokenize(text)
            .iter()
            .map(|t| self.vocab[t])
            .collect()
    }

    pub fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }

    fn bpe(&self, piece: &str) -> Vec<String> {
        let mut word: Vec<String> = piece
            .bytes()
            .map(|b| self.byte_symbols[b as usize].clone())
            .collect();
        while word.len() > 1 {
            let best = word
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|r| (*r, w)))
                .min_by_key(|(r, _)| *r)
                .map(|(_, w)| (w[0].clone(), w[1].clone()));
            let Some((a, b)) = best else { break };
            let mut merged = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == a && word[i + 1] == b {
                    merged.push(format!("{a}{b}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut word[i]));
                    i += 1;
                }
            }
            word = merged;
        }
        word
    }
}

/// Count tokens of `text` under `tokenizer`.
pub fn count_tokens(text: &str, tokenizer: &Tokenizer) -> usize {
    tokenizer.count(text)
}

/// GPT-2's reversible byte to printable-unicode mapping.
fn byte_symbols() -> Vec<String> {
    let printable = |b: u32| {
        (u32::from('!')..=u32::from('~')).contains(&b)
            || (0xA1..=0xAC).contains(&b)
            || (0xAE..=0xFF).contains(&b)
    };
    let mut shifted = 0;
    (0u32..256)
        .map(|b| {
            let cp = if printable(b) {
                b
            } else {
                shifted += 1;
                255 + shifted
            };
            char::from_u32(cp).expect("valid code point").to_string()
        })
        .collect()
}
