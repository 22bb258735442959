use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Method, PairRecord};

/// Combined token count of the MMA training set, shown as a reference row.
pub const MMA_REFERENCE_TOKENS: u64 = 10_916_097;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub pair_count: usize,
    pub tokens_formal: usize,
    pub tokens_informal: usize,
    /// `tokens_formal + tokens_informal` over all pairs of the method.
    pub token_total: usize,
    /// Mean of per-pair combined token length.
    pub mean_length: f64,
    pub median_length: f64,
    pub duplicate_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Every method has a row, possibly all zero.
    pub methods: BTreeMap<Method, MethodStats>,
}

impl CorpusStats {
    pub fn compute(corpus: &[PairRecord], duplicates: &BTreeMap<Method, usize>) -> Self {
        let mut lengths: BTreeMap<Method, Vec<usize>> =
            Method::ALL.iter().map(|m| (*m, Vec::new())).collect();
        let mut methods: BTreeMap<Method, MethodStats> =
            Method::ALL.iter().map(|m| (*m, MethodStats::default())).collect();
        for r in corpus {
            let s = methods.get_mut(&r.method).expect("all methods present");
            s.pair_count += 1;
            s.tokens_formal += r.tokens_formal;
            s.tokens_informal += r.tokens_informal;
            s.token_total += r.token_total();
            lengths.get_mut(&r.method).expect("all methods present").push(r.token_total());
        }
        for (m, s) in methods.iter_mut() {
            let mut l = std::mem::take(lengths.get_mut(m).expect("all methods present"));
            s.duplicate_count = duplicates.get(m).copied().unwrap_or(0);
            if l.is_empty() {
                continue;
            }
            s.mean_length = s.token_total as f64 / l.len() as f64;
            l.sort_unstable();
            let mid = l.len() / 2;
            s.median_length = if l.len().is_multiple_of(2) {
                (l[mid - 1] + l[mid]) as f64 / 2.0
            } else {
                l[mid] as f64
            };
        }
        Self { methods }
    }

    pub fn method(&self, m: Method) -> &MethodStats {
        &self.methods[&m]
    }

    pub fn total_pairs(&self) -> usize {
        self.methods.values().map(|s| s.pair_count).sum()
    }

    pub fn total_tokens(&self) -> usize {
        self.methods.values().map(|s| s.token_total).sum()
    }

    pub fn total_duplicates(&self) -> usize {
        self.methods.values().map(|s| s.duplicate_count).sum()
    }

    /// Markdown token-count table with the MMA reference row first. Methods
    /// without pairs are omitted.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("| Data Collection Method | Pairs | Formal Tokens | Informal Tokens | Token Count |\n");
        out.push_str("|---|---:|---:|---:|---:|\n");
        let _ = writeln!(
            out,
            "| MMA Train (reference) | - | - | - | {} |",
            thousands(MMA_REFERENCE_TOKENS as usize)
        );
        for (m, s) in &self.methods {
            if s.pair_count == 0 {
                continue;
            }
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                m.label(),
                thousands(s.pair_count),
                thousands(s.tokens_formal),
                thousands(s.tokens_informal),
                thousands(s.token_total)
            );
        }
        let _ = writeln!(
            out,
            "| Total (this corpus) | {} | {} | {} | {} |",
            thousands(self.total_pairs()),
            thousands(self.methods.values().map(|s| s.tokens_formal).sum()),
            thousands(self.methods.values().map(|s| s.tokens_informal).sum()),
            thousands(self.total_tokens())
        );
        out
    }

    /// Machine-readable report including the reference constant.
    pub fn to_report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "methods": self.methods,
            "total_pairs": self.total_pairs(),
            "total_tokens": self.total_tokens(),
            "total_duplicates": self.total_duplicates(),
            "reference": { "mma_train_tokens": MMA_REFERENCE_TOKENS },
        })
    }
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, f: usize, i: usize) -> PairRecord {
        let mut r = PairRecord::new(format!("f{f}{i}"), "x", method, "s");
        r.tokens_formal = f;
        r.tokens_informal = i;
        r
    }

    #[test]
    fn thousands_separator() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1754), "1,754");
        assert_eq!(thousands(10_916_097), "10,916,097");
    }

    #[test]
    fn mean_and_median() {
        let corpus = vec![
            rec(Method::Regex, 1, 1),
            rec(Method::Regex, 2, 2),
            rec(Method::Regex, 10, 0),
            rec(Method::Regex, 3, 3),
        ];
        let s = CorpusStats::compute(&corpus, &BTreeMap::new());
        let r = s.method(Method::Regex);
        assert_eq!(r.token_total, 22);
        assert_eq!(r.mean_length, 5.5);
        assert_eq!(r.median_length, 5.0);
        assert_eq!(s.total_tokens(), 22);
    }

    #[test]
    fn table_has_reference_row() {
        let s = CorpusStats::compute(&[rec(Method::Otf, 3, 4)], &BTreeMap::new());
        let t = s.render_table();
        assert!(t.contains("| MMA Train (reference) | - | - | - | 10,916,097 |"));
        assert!(t.contains("| On-the-fly backtranslation | 1 | 3 | 4 | 7 |"));
        assert!(!t.contains("Regex-parsed"));
        assert_eq!(s.to_report_json()["reference"]["mma_train_tokens"], 10_916_097);
    }
}
