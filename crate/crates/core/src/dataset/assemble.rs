use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::stats::CorpusStats;
use super::{content_id, Method, PairRecord};
use crate::tokenizer::Tokenizer;

/// One input item: a parsed record or a line that could not be read.
#[derive(Debug, Clone)]
pub enum StreamItem {
    Record(PairRecord),
    Malformed { line: usize, raw: String, reason: String },
}

/// A named sequence of pairs. When `method` is set it overrides whatever the
/// records carry.
#[derive(Debug, Clone)]
pub struct PairStream {
    pub name: String,
    pub method: Option<Method>,
    pub items: Vec<StreamItem>,
}

/// Lenient input shape: ids and token counts are recomputed anyway.
#[derive(Deserialize)]
struct RawPair {
    formal: String,
    informal: String,
    method: Option<Method>,
    source: Option<String>,
    #[serde(default)]
    low_quality: bool,
}

impl PairStream {
    pub fn from_records(name: impl Into<String>, method: Option<Method>, records: Vec<PairRecord>) -> Self {
        Self {
            name: name.into(),
            method,
            items: records.into_iter().map(StreamItem::Record).collect(),
        }
    }

    /// Parse JSON Lines. Blank lines are skipped; anything unparsable becomes
    /// a [`StreamItem::Malformed`].
    pub fn from_jsonl(name: impl Into<String>, method: Option<Method>, text: &str) -> Self {
        let name = name.into();
        let mut items = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| StreamItem::Malformed {
                line: idx + 1,
                raw: line.to_string(),
                reason,
            };
            let item = match serde_json::from_str::<RawPair>(line) {
                Ok(raw) => match raw.method.or(method) {
                    Some(m) => {
                        let mut rec = PairRecord::new(
                            raw.formal,
                            raw.informal,
                            m,
                            raw.source.unwrap_or_else(|| format!("{name}:{}", idx + 1)),
                        );
                        rec.low_quality = raw.low_quality;
                        StreamItem::Record(rec)
                    }
                    None => malformed("record has no method and the stream is untagged".into()),
                },
                Err(e) => malformed(e.to_string()),
            };
            items.push(item);
        }
        Self { name, method, items }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub stream: String,
    pub line: Option<usize>,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssembleOptions {
    /// Move `low_quality` pairs to quarantine instead of the corpus.
    pub drop_low_quality: bool,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    /// Deduplicated records sorted by `(method, id)`.
    pub corpus: Vec<PairRecord>,
    pub quarantine: Vec<Quarantined>,
    pub stats: CorpusStats,
}

/// Merge pair streams into one deduplicated, token-counted corpus.
///
/// Records are keyed by the hash of their normalized `(formal, informal)`
/// text; the first occurrence wins and later copies count as duplicates of
/// their own method.
pub fn assemble(streams: &[PairStream], tokenizer: &Tokenizer, opts: AssembleOptions) -> Assembled {
    let mut seen = HashSet::new();
    let mut corpus = Vec::new();
    let mut quarantine = Vec::new();
    let mut duplicates: BTreeMap<Method, usize> = BTreeMap::new();

    for stream in streams {
        for (pos, item) in stream.items.iter().enumerate() {
            let rec = match item {
                StreamItem::Record(r) => r,
                StreamItem::Malformed { line, raw, reason } => {
                    quarantine.push(Quarantined {
                        stream: stream.name.clone(),
                        line: Some(*line),
                        reason: reason.clone(),
                        raw: raw.clone(),
                    });
                    continue;
                }
            };
            let mut rec = rec.clone();
            if let Some(m) = stream.method {
                rec.method = m;
            }
            let to_quarantine = |reason: String, rec: &PairRecord| Quarantined {
                stream: stream.name.clone(),
                line: Some(pos + 1),
                reason,
                raw: serde_json::to_string(rec).unwrap_or_default(),
            };
            if let Err(reason) = rec.validate() {
                quarantine.push(to_quarantine(reason, &rec));
                continue;
            }
            if opts.drop_low_quality && rec.low_quality {
                quarantine.push(to_quarantine("low quality".into(), &rec));
                continue;
            }
            rec.id = content_id(&rec.formal, &rec.informal);
            if !seen.insert(rec.id.clone()) {
                *duplicates.entry(rec.method).or_default() += 1;
                continue;
            }
            corpus.push(rec.with_token_counts(tokenizer));
        }
    }

    corpus.sort_by(|a, b| (a.method, &a.id).cmp(&(b.method, &b.id)));
    let stats = CorpusStats::compute(&corpus, &duplicates);
    Assembled {
        corpus,
        quarantine,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok() -> &'static Tokenizer {
        Tokenizer::reference()
    }

    #[test]
    fn shared_pair_is_kept_once() {
        let a = PairStream::from_records(
            "a",
            Some(Method::Regex),
            vec![
                PairRecord::new("f1", "i1", Method::Regex, "t1"),
                PairRecord::new("f2", "i2", Method::Regex, "t2"),
            ],
        );
        let b = PairStream::from_records(
            "b",
            Some(Method::FullProof6Shot),
            vec![
                PairRecord::new("f1 ", " i1", Method::FullProof6Shot, "t1"),
                PairRecord::new("f3", "i3", Method::FullProof6Shot, "t3"),
            ],
        );
        let out = assemble(&[a, b], tok(), AssembleOptions::default());
        assert_eq!(out.corpus.len(), 3);
        assert_eq!(out.stats.total_duplicates(), 1);
        assert_eq!(out.stats.method(Method::FullProof6Shot).duplicate_count, 1);
        assert_eq!(out.stats.method(Method::Regex).pair_count, 2);
    }

    #[test]
    fn empty_inputs() {
        let out = assemble(&[], tok(), AssembleOptions::default());
        assert!(out.corpus.is_empty());
        assert_eq!(out.stats.total_pairs(), 0);
        assert_eq!(out.stats.total_tokens(), 0);
        assert!(out.stats.methods.values().all(|m| m.pair_count == 0 && m.token_total == 0));
    }

    #[test]
    fn malformed_lines_are_quarantined() {
        let text = "{\"formal\":\"f\",\"informal\":\"i\"}\nnot json\n\n{\"formal\":\"g\"}\n{\"formal\":\"h\",\"informal\":\"\"}\n";
        let s = PairStream::from_jsonl("in.jsonl", Some(Method::External), text);
        let out = assemble(&[s], tok(), AssembleOptions::default());
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(out.quarantine.len(), 3);
        assert_eq!(out.quarantine[0].line, Some(2));
        assert_eq!(out.quarantine[1].line, Some(4));
        assert!(out.quarantine[2].reason.contains("empty informal"));
    }

    #[test]
    fn untagged_stream_needs_record_methods() {
        let s = PairStream::from_jsonl("x", None, "{\"formal\":\"f\",\"informal\":\"i\"}\n");
        let out = assemble(&[s], tok(), AssembleOptions::default());
        assert!(out.corpus.is_empty());
        assert_eq!(out.quarantine.len(), 1);
    }

    #[test]
    fn low_quality_kept_unless_dropped() {
        let recs = vec![PairRecord::new("f", "(no recognized tactics)", Method::Regex, "t").flagged_low_quality()];
        let s = PairStream::from_records("x", None, recs);
        let kept = assemble(std::slice::from_ref(&s), tok(), AssembleOptions::default());
        assert_eq!(kept.corpus.len(), 1);
        let dropped = assemble(&[s], tok(), AssembleOptions { drop_low_quality: true });
        assert!(dropped.corpus.is_empty());
        assert_eq!(dropped.quarantine[0].reason, "low quality");
    }

    #[test]
    fn output_sorted_and_token_counted() {
        let recs = vec![
            PairRecord::new("theorem b", "two", Method::Otf, "t"),
            PairRecord::new("theorem a", "one", Method::Regex, "t"),
        ];
        let out = assemble(&[PairStream::from_records("x", None, recs)], tok(), AssembleOptions::default());
        assert_eq!(out.corpus[0].method, Method::Regex);
        for r in &out.corpus {
            assert_eq!(r.tokens_formal, tok().count(&r.formal));
            assert_eq!(r.tokens_informal, tok().count(&r.informal));
        }
    }
}
