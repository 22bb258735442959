//! Pair records and corpus assembly.

mod assemble;
mod split;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::tokenizer::Tokenizer;

pub use assemble::{assemble, AssembleOptions, Assembled, PairStream, Quarantined, StreamItem};
pub use split::{split, RatioError, Splits};
pub use stats::{CorpusStats, MethodStats, MMA_REFERENCE_TOKENS};

/// How a pair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "regex")]
    Regex,
    #[serde(rename = "full_proof_6shot")]
    FullProof6Shot,
    #[serde(rename = "individual_tactics")]
    IndividualTactics,
    #[serde(rename = "otf")]
    Otf,
    #[serde(rename = "external")]
    External,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Regex,
        Method::FullProof6Shot,
        Method::IndividualTactics,
        Method::Otf,
        Method::External,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Regex => "regex",
            Method::FullProof6Shot => "full_proof_6shot",
            Method::IndividualTactics => "individual_tactics",
            Method::Otf => "otf",
            Method::External => "external",
        }
    }

    /// Row label used in the token-count report.
    pub fn label(self) -> &'static str {
        match self {
            Method::Regex => "Regex-parsed proofs",
            Method::FullProof6Shot => "Teacher full proof (6-shot)",
            Method::IndividualTactics => "Teacher individual tactics (0-shot)",
            Method::Otf => "On-the-fly backtranslation",
            Method::External => "External pairs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// One (formal, informal) training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub formal: String,
    pub informal: String,
    pub method: Method,
    /// Provenance key; for mined pairs this is the theorem id. Pairs sharing a
    /// source are kept in the same split.
    pub source: String,
    pub tokens_formal: usize,
    pub tokens_informal: usize,
    pub low_quality: bool,
}

impl PairRecord {
    pub fn new(
        formal: impl Into<String>,
        informal: impl Into<String>,
        method: Method,
        source: impl Into<String>,
    ) -> Self {
        let formal = formal.into();
        let informal = informal.into();
        Self {
            id: content_id(&formal, &informal),
            formal,
            informal,
            method,
            source: source.into(),
            tokens_formal: 0,
            tokens_informal: 0,
            low_quality: false,
        }
    }

    pub fn flagged_low_quality(mut self) -> Self {
        self.low_quality = true;
        self
    }

    pub fn with_token_counts(mut self, tokenizer: &Tokenizer) -> Self {
        self.tokens_formal = tokenizer.count(&self.formal);
        self.tokens_informal = tokenizer.count(&self.informal);
        self
    }

    pub fn token_total(&self) -> usize {
        self.tokens_formal + self.tokens_informal
    }

    /// Checks the record-level invariants; returns the reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if !self.low_quality {
            if self.formal.trim().is_empty() {
                return Err("empty formal side".into());
            }
            if self.informal.trim().is_empty() {
                return Err("empty informal side".into());
            }
        }
        Ok(())
    }
}

/// Trim, collapse whitespace runs to one space, and NFC-normalize.
pub fn normalize_text(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.nfc().collect()
}

/// Deterministic pair id: hash of the normalized formal and informal sides.
pub fn content_id(formal: &str, informal: &str) -> String {
    let mut h = Sha256::new();
    h.update(normalize_text(formal).as_bytes());
    h.update([0u8]);
    h.update(normalize_text(informal).as_bytes());
    hex::encode(h.finalize())[..32].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
    }

    #[test]
    fn normalization_ignores_whitespace_and_composition() {
        assert_eq!(normalize_text("  a \n\t b  "), "a b");
        // "é" as e + combining acute vs precomposed.
        assert_eq!(normalize_text("e\u{301}"), normalize_text("\u{e9}"));
        assert_eq!(content_id("a  b", "c"), content_id(" a b", "c\n"));
        assert_ne!(content_id("ab", "c"), content_id("a", "bc"));
    }

    #[test]
    fn validation() {
        assert!(PairRecord::new("f", "i", Method::Regex, "s").validate().is_ok());
        assert!(PairRecord::new("f", " ", Method::Regex, "s").validate().is_err());
        assert!(PairRecord::new("f", "", Method::Regex, "s")
            .flagged_low_quality()
            .validate()
            .is_ok());
    }

    #[test]
    fn record_json_field_names() {
        let r = PairRecord::new("f", "i", Method::FullProof6Shot, "s");
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "formal",
                "id",
                "informal",
                "low_quality",
                "method",
                "source",
                "tokens_formal",
                "tokens_informal"
            ]
        );
        assert_eq!(v["method"], "full_proof_6shot");
    }
}
