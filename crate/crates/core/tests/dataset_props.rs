use std::collections::BTreeSet;

use informalize::dataset::{assemble, split, AssembleOptions, Method, PairRecord, PairStream};
use informalize::tokenizer::Tokenizer;
use proptest::prelude::*;

fn record() -> impl Strategy<Value = PairRecord> {
    ("[a-c ]{1,6}", "[x-z ]{1,6}", 0usize..4, 0usize..12).prop_map(|(f, i, m, s)| {
        let method = [Method::Regex, Method::FullProof6Shot, Method::IndividualTactics, Method::Otf][m];
        PairRecord::new(f, i, method, format!("src{s}"))
    })
}

proptest! {
    #[test]
    fn split_is_a_partition(corpus in prop::collection::vec(record(), 0..80), seed in any::<u64>(), a in 0u8..=10, b in 0u8..=10) {
        let (a, b) = (a.min(10), b.min(10 - a.min(10)));
        let ratios = [a as f64 / 10.0, b as f64 / 10.0, (10 - a - b) as f64 / 10.0];
        let s = split(&corpus, ratios, seed).unwrap();
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), corpus.len());
        let mut all: Vec<&PairRecord> = s.train.iter().chain(&s.val).chain(&s.test).collect();
        all.sort_by(|x, y| (&x.id, &x.source).cmp(&(&y.id, &y.source)));
        let mut want: Vec<&PairRecord> = corpus.iter().collect();
        want.sort_by(|x, y| (&x.id, &x.source).cmp(&(&y.id, &y.source)));
        prop_assert_eq!(all, want);
        // No source straddles two splits.
        let sources = |v: &[PairRecord]| v.iter().map(|r| r.source.clone()).collect::<BTreeSet<_>>();
        let (tr, va, te) = (sources(&s.train), sources(&s.val), sources(&s.test));
        prop_assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
        prop_assert_eq!(split(&corpus, ratios, seed).unwrap(), s);
    }

    #[test]
    fn dedup_is_idempotent(corpus in prop::collection::vec(record(), 0..120)) {
        let tok = Tokenizer::reference();
        let once = assemble(&[PairStream::from_records("a", None, corpus.clone())], tok, AssembleOptions::default());
        let twice = assemble(&[PairStream::from_records("b", None, once.corpus.clone())], tok, AssembleOptions::default());
        prop_assert_eq!(&twice.corpus, &once.corpus);
        let ids: BTreeSet<&str> = once.corpus.iter().map(|r| r.id.as_str()).collect();
        prop_assert_eq!(ids.len(), once.corpus.len());
        prop_assert_eq!(once.corpus.len() + once.stats.total_duplicates() + once.quarantine.len(), corpus.len());
    }
}
