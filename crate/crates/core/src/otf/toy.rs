use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TranslatorError, TranslatorPort};

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Token-level loss for translators that emit text only: each generated
/// token is a point mass, so a match costs 0 and a mismatch, or a missing
/// or extra token, costs `ln(vocab_size)`. Averaged over the longer side and
/// over the batch.
pub fn point_mass_loss(generated: &[String], reference: &[String], vocab_size: usize) -> f64 {
    let penalty = (vocab_size.max(2) as f64).ln();
    let mut total = 0.0;
    for (g, r) in generated.iter().zip(reference) {
        let (g, r) = (tokens(g), tokens(r));
        let len = g.len().max(r.len());
        if len == 0 {
            continue;
        }
        let wrong = (0..len).filter(|&j| g.get(j) != r.get(j)).count();
        total += wrong as f64 * penalty / len as f64;
    }
    total / reference.len().max(1) as f64
}

/// Passes text through unchanged in both directions.
#[derive(Debug, Clone)]
pub struct IdentityTranslator {
    vocab_size: usize,
}

impl IdentityTranslator {
    pub fn for_corpus(corpus: &[String]) -> Self {
        let vocab: BTreeSet<&str> = corpus.iter().flat_map(|s| tokens(s)).collect();
        Self {
            vocab_size: vocab.len(),
        }
    }
}

impl TranslatorPort for IdentityTranslator {
    fn fl_to_il(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError> {
        Ok(batch.to_vec())
    }

    fn il_to_fl(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError> {
        Ok(batch.to_vec())
    }

    fn loss(&mut self, generated: &[String], reference: &[String]) -> Result<f64, TranslatorError> {
        Ok(point_mass_loss(generated, reference, self.vocab_size))
    }

    fn update(&mut self, _loss: f64) -> Result<(), TranslatorError> {
        Ok(())
    }
}

/// Substitution-cipher translator over a closed token vocabulary.
///
/// Formal to informal is a fixed, seeded token bijection. Informal to formal
/// is a learnable table of logits, one softmax row per informal token, which
/// the loop trains from its own round trips. The loss is mean per-token
/// cross-entropy with the reference aligned by position; each extra or
/// missing token costs `ln V`.
#[derive(Debug, Clone)]
pub struct ToyCipherTranslator {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// Formal token id to informal token id.
    forward: Vec<usize>,
    /// Informal token id to formal token id, for decoding cipher text.
    cipher_index: HashMap<String, usize>,
    /// Row-major `V x V`: row = informal id, column = formal id.
    logits: Vec<f64>,
    learning_rate: f64,
    /// Informal ids per sentence of the last `il_to_fl` batch.
    last_source: Vec<Vec<Option<usize>>>,
    /// `(informal id, reference formal id)` targets from the last `loss`.
    pending: Vec<(usize, usize)>,
}

impl ToyCipherTranslator {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.05;

    pub fn new(corpus: &[String], seed: u64) -> Self {
        Self::with_learning_rate(corpus, seed, Self::DEFAULT_LEARNING_RATE)
    }

    pub fn with_learning_rate(corpus: &[String], seed: u64, learning_rate: f64) -> Self {
        let vocab: Vec<String> = corpus
            .iter()
            .flat_map(|s| tokens(s))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(String::from)
            .collect();
        let v = vocab.len();
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut forward: Vec<usize> = (0..v).collect();
        forward.shuffle(&mut rng);
        let cipher_index = (0..v).map(|i| (Self::cipher_token(i), i)).collect();
        let logits = (0..v * v).map(|_| rng.gen_range(-0.01..0.01)).collect();
        Self {
            vocab,
            index,
            forward,
            cipher_index,
            logits,
            learning_rate,
            last_source: Vec::new(),
            pending: Vec::new(),
        }
    }

    fn cipher_token(id: usize) -> String {
        format!("w{id:03}")
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn row(&self, il: usize) -> &[f64] {
        let v = self.vocab.len();
        &self.logits[il * v..(il + 1) * v]
    }

    fn softmax(&self, il: usize) -> Vec<f64> {
        let row = self.row(il);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / sum).collect()
    }

    fn argmax(&self, il: usize) -> usize {
        let row = self.row(il);
        (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
            .expect("vocabulary is non-empty")
    }

    /// Fraction of informal tokens the backward table currently decodes
    /// correctly.
    pub fn inverse_accuracy(&self) -> f64 {
        let v = self.vocab.len();
        if v == 0 {
            return 1.0;
        }
        let correct = (0..v).filter(|&f| self.argmax(self.forward[f]) == f).count();
        correct as f64 / v as f64
    }
}

impl TranslatorPort for ToyCipherTranslator {
    fn fl_to_il(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError> {
        Ok(batch
            .iter()
            .map(|s| {
                tokens(s)
                    .into_iter()
                    .map(|t| match self.index.get(t) {
                        Some(&f) => Self::cipher_token(self.forward[f]),
                        None => t.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect())
    }

    fn il_to_fl(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError> {
        self.last_source = batch
            .iter()
            .map(|s| tokens(s).into_iter().map(|t| self.cipher_index.get(t).copied()).collect())
            .collect();
        Ok(self
            .last_source
            .iter()
            .zip(batch)
            .map(|(ids, s)| {
                ids.iter()
                    .zip(tokens(s))
                    .map(|(id, raw)| match id {
                        Some(il) => self.vocab[self.argmax(*il)].as_str(),
                        None => raw,
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect())
    }

    fn loss(&mut self, generated: &[String], reference: &[String]) -> Result<f64, TranslatorError> {
        if generated.len() != reference.len() || self.last_source.len() != reference.len() {
            return Err(TranslatorError(format!(
                "batch size mismatch: {} generated, {} reference, {} decoded",
                generated.len(),
                reference.len(),
                self.last_source.len()
            )));
        }
        let penalty = (self.vocab.len().max(2) as f64).ln();
        self.pending.clear();
        let mut total = 0.0;
        for (source, r) in self.last_source.iter().zip(reference) {
            let r = tokens(r);
            let len = source.len().max(r.len());
            if len == 0 {
                continue;
            }
            let mut sentence = 0.0;
            for j in 0..len {
                match (source.get(j).copied().flatten(), r.get(j).and_then(|t| self.index.get(*t))) {
                    (Some(il), Some(&target)) => {
                        sentence -= self.softmax(il)[target].max(f64::MIN_POSITIVE).ln();
                        self.pending.push((il, target));
                    }
                    _ => sentence += penalty,
                }
            }
            total += sentence / len as f64;
        }
        Ok(total / reference.len().max(1) as f64)
    }

    fn update(&mut self, _loss: f64) -> Result<(), TranslatorError> {
        let v = self.vocab.len();
        let pending = std::mem::take(&mut self.pending);
        for (il, target) in pending {
            let p = self.softmax(il);
            let row = &mut self.logits[il * v..(il + 1) * v];
            for (k, w) in row.iter_mut().enumerate() {
                let grad = p[k] - if k == target { 1.0 } else { 0.0 };
                *w -= self.learning_rate * grad;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<String> {
        vec!["a b c".into(), "c b a d".into(), "d d a".into()]
    }

    #[test]
    fn point_mass_properties() {
        let x = corpus();
        assert_eq!(point_mass_loss(&x, &x, 4), 0.0);
        let y = vec!["a b".to_string(), "c b a d".into(), "d d x".into()];
        let l = point_mass_loss(&y, &x, 4);
        let ln4 = 4f64.ln();
        assert!((l - (ln4 / 3.0 + ln4 / 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cipher_is_a_bijection() {
        let mut t = ToyCipherTranslator::new(&corpus(), 1);
        let il = t.fl_to_il(&corpus()).unwrap();
        assert_ne!(il, corpus());
        let mut seen: Vec<usize> = t.forward.clone();
        seen.sort();
        assert_eq!(seen, (0..4).collect::<Vec<_>>());
        assert_eq!(t.fl_to_il(&["a zz".into()]).unwrap()[0].split(' ').nth(1), Some("zz"));
    }

    #[test]
    fn initial_loss_is_near_uniform_and_decreases() {
        let c = corpus();
        let mut t = ToyCipherTranslator::with_learning_rate(&c, 7, 0.5);
        let initial = t.evaluate(&c).unwrap();
        assert!((initial - 4f64.ln()).abs() < 0.05, "{initial}");
        for _ in 0..50 {
            let il = t.fl_to_il(&c).unwrap();
            let fl = t.il_to_fl(&il).unwrap();
            let l = t.loss(&fl, &c).unwrap();
            t.update(l).unwrap();
        }
        assert!(t.evaluate(&c).unwrap() < initial * 0.2);
        assert_eq!(t.inverse_accuracy(), 1.0);
        let il = t.fl_to_il(&c).unwrap();
        assert_eq!(t.il_to_fl(&il).unwrap(), c);
    }

    #[test]
    fn length_mismatch_penalty() {
        let c = corpus();
        let mut t = ToyCipherTranslator::new(&c, 0);
        let il = t.fl_to_il(&["a b".into()]).unwrap();
        let fl = t.il_to_fl(&il).unwrap();
        let l = t.loss(&fl, &["a b c".into()]).unwrap();
        assert!(l >= 4f64.ln() / 3.0);
        assert!(t.loss(&fl, &[]).is_err());
    }
}
