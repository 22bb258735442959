//! On-the-fly backtranslation: translate formal to informal, back to formal,
//! score against the original and update, one batch at a time.

mod plot;
mod toy;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Method, PairRecord};

pub use plot::{trace_csv, trace_svg};
pub use toy::{point_mass_loss, IdentityTranslator, ToyCipherTranslator};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{0}")]
pub struct TranslatorError(pub String);

/// A model that translates in both directions and can learn from its own
/// round trips.
pub trait TranslatorPort {
    fn fl_to_il(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError>;
    fn il_to_fl(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError>;
    /// Non-negative cross-entropy-style loss of `generated` against `reference`.
    fn loss(&mut self, generated: &[String], reference: &[String]) -> Result<f64, TranslatorError>;
    /// Take one parameter step for the batch last scored by [`loss`](Self::loss).
    fn update(&mut self, loss: f64) -> Result<(), TranslatorError>;

    /// Round-trip loss on `corpus` without updating.
    fn evaluate(&mut self, corpus: &[String]) -> Result<f64, TranslatorError> {
        let il = self.fl_to_il(corpus)?;
        let fl = self.il_to_fl(&il)?;
        self.loss(&fl, corpus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub batch_size: usize,
    pub max_steps: usize,
    pub eval_every: usize,
    pub seed: u64,
    pub plateau_window: usize,
    pub plateau_epsilon: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            max_steps: 500,
            eval_every: 50,
            seed: 0,
            plateau_window: 20,
            plateau_epsilon: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LoopError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid loop config: {0}")]
    Config(String),
    #[error("translator failed at step {step}: {source}")]
    Translator {
        step: usize,
        #[source]
        source: TranslatorError,
    },
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), LoopError> {
        if self.batch_size == 0 || self.max_steps == 0 || self.eval_every == 0 {
            return Err(LoopError::Config("batch_size, max_steps and eval_every must be positive".into()));
        }
        if self.eval_every > self.max_steps {
            return Err(LoopError::Config("eval_every must not exceed max_steps".into()));
        }
        if self.plateau_epsilon.is_nan() || self.plateau_epsilon < 0.0 {
            return Err(LoopError::Config("plateau_epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_loss: Option<f64>,
}

/// A synthetic pair produced during the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPair {
    pub step: usize,
    /// Position of the formal text in the input corpus.
    pub corpus_index: usize,
    pub formal: String,
    pub informal: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopTrace {
    /// Eval loss before the first update.
    pub initial_eval_loss: f64,
    pub steps: Vec<StepRecord>,
    pub plateau_step: Option<usize>,
    pub generated: Vec<GeneratedPair>,
}

impl LoopTrace {
    pub fn final_eval_loss(&self) -> Option<f64> {
        self.steps.iter().rev().find_map(|s| s.eval_loss)
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.train_loss).collect()
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        self.steps
            .iter()
            .map(|s| serde_json::to_string(s).expect("step serializes") + "\n")
            .collect()
    }
}

/// Run the four-step cycle for `cfg.max_steps` batches.
///
/// Batches are drawn from a seeded shuffle of the corpus that is reshuffled
/// on each pass. The whole corpus is evaluated before the first step, every
/// `eval_every` steps and after the last step.
pub fn run_loop(corpus: &[String], t: &mut dyn TranslatorPort, cfg: &LoopConfig) -> Result<LoopTrace, LoopError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(LoopError::EmptyCorpus);
    }
    let err = |step: usize| move |source| LoopError::Translator { step, source };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut trace = LoopTrace {
        initial_eval_loss: t.evaluate(corpus).map_err(err(0))?,
        ..Default::default()
    };
    for step in 1..=cfg.max_steps {
        let mut idx = Vec::with_capacity(cfg.batch_size);
        while idx.len() < cfg.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            idx.push(order[cursor]);
            cursor += 1;
        }
        let batch: Vec<String> = idx.iter().map(|&i| corpus[i].clone()).collect();

        let il = t.fl_to_il(&batch).map_err(err(step))?;
        let fl = t.il_to_fl(&il).map_err(err(step))?;
        let loss = t.loss(&fl, &batch).map_err(err(step))?;
        t.update(loss).map_err(err(step))?;

        for (k, (formal, informal)) in batch.into_iter().zip(il).enumerate() {
            trace.generated.push(GeneratedPair {
                step,
                corpus_index: idx[k],
                formal,
                informal,
            });
        }
        let eval_loss = if step % cfg.eval_every == 0 || step == cfg.max_steps {
            Some(t.evaluate(corpus).map_err(err(step))?)
        } else {
            None
        };
        trace.steps.push(StepRecord {
            step,
            train_loss: loss,
            eval_loss,
        });
    }
    trace.plateau_step = detect_plateau(&trace.train_losses(), cfg.plateau_window, cfg.plateau_epsilon);
    Ok(trace)
}

/// First 1-based step at which the trailing `window` losses span less than
/// `epsilon` (max - min).
pub fn detect_plateau(losses: &[f64], window: usize, epsilon: f64) -> Option<usize> {
    if window == 0 || losses.len() < window {
        return None;
    }
    losses.windows(window).position(|w| {
        let (lo, hi) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo < epsilon
    })
    .map(|start| start + window)
}

/// The synthetic pairs of a run as `otf` pair records.
pub fn export_pairs(trace: &LoopTrace) -> Vec<PairRecord> {
    trace
        .generated
        .iter()
        .map(|g| PairRecord::new(g.formal.clone(), g.informal.clone(), Method::Otf, format!("otf:{}", g.corpus_index)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("theorem t{i} : x = x := rfl")).collect()
    }

    /// Records the order of calls.
    #[derive(Default)]
    struct Recorder {
        calls: Vec<&'static str>,
        fail_at_loss: Option<usize>,
    }

    impl TranslatorPort for Recorder {
        fn fl_to_il(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError> {
            self.calls.push("fl_to_il");
            Ok(batch.to_vec())
        }
        fn il_to_fl(&mut self, batch: &[String]) -> Result<Vec<String>, TranslatorError> {
            self.calls.push("il_to_fl");
            Ok(batch.to_vec())
        }
        fn loss(&mut self, _: &[String], _: &[String]) -> Result<f64, TranslatorError> {
            self.calls.push("loss");
            let n = self.calls.iter().filter(|c| **c == "loss").count();
            if Some(n) == self.fail_at_loss {
                return Err(TranslatorError("boom".into()));
            }
            Ok(1.0)
        }
        fn update(&mut self, _: f64) -> Result<(), TranslatorError> {
            self.calls.push("update");
            Ok(())
        }
        fn evaluate(&mut self, _: &[String]) -> Result<f64, TranslatorError> {
            Ok(1.0)
        }
    }

    #[test]
    fn call_order() {
        let mut r = Recorder::default();
        let cfg = LoopConfig {
            max_steps: 7,
            eval_every: 3,
            ..Default::default()
        };
        run_loop(&corpus(5), &mut r, &cfg).unwrap();
        assert_eq!(r.calls.len(), 28);
        for chunk in r.calls.chunks(4) {
            assert_eq!(chunk, ["fl_to_il", "il_to_fl", "loss", "update"]);
        }
    }

    #[test]
    fn translator_error_carries_step() {
        let mut r = Recorder {
            fail_at_loss: Some(3),
            ..Default::default()
        };
        let err = run_loop(&corpus(5), &mut r, &LoopConfig::default()).unwrap_err();
        assert!(matches!(err, LoopError::Translator { step: 3, .. }));
    }

    #[test]
    fn identity_translator() {
        let c = corpus(10);
        let mut t = IdentityTranslator::for_corpus(&c);
        let cfg = LoopConfig {
            max_steps: 30,
            eval_every: 10,
            plateau_window: 5,
            ..Default::default()
        };
        let trace = run_loop(&c, &mut t, &cfg).unwrap();
        assert!(trace.steps.iter().all(|s| s.train_loss == 0.0));
        assert_eq!(trace.plateau_step, Some(5));
        assert!(export_pairs(&trace).iter().all(|p| p.formal == p.informal));
    }

    #[test]
    fn one_step_and_one_epoch_export() {
        let c = corpus(10);
        let cfg = LoopConfig {
            batch_size: 10,
            max_steps: 1,
            eval_every: 1,
            ..Default::default()
        };
        let trace = run_loop(&c, &mut IdentityTranslator::for_corpus(&c), &cfg).unwrap();
        assert_eq!(trace.steps.len(), 1);
        let pairs = export_pairs(&trace);
        assert_eq!(pairs.len(), 10);
        assert!(pairs.iter().all(|p| p.method == Method::Otf));
        let mut formals: Vec<_> = pairs.iter().map(|p| p.formal.clone()).collect();
        formals.sort();
        let mut expected = c.clone();
        expected.sort();
        assert_eq!(formals, expected);
        assert!(export_pairs(&LoopTrace::default()).is_empty());
    }

    #[test]
    fn config_and_corpus_errors() {
        let c = corpus(2);
        let mut t = IdentityTranslator::for_corpus(&c);
        assert_eq!(run_loop(&[], &mut t, &LoopConfig::default()), Err(LoopError::EmptyCorpus));
        let bad = LoopConfig {
            eval_every: 600,
            ..Default::default()
        };
        assert!(matches!(run_loop(&c, &mut t, &bad), Err(LoopError::Config(_))));
    }

    #[test]
    fn plateau_detection() {
        assert_eq!(detect_plateau(&[1.0; 10], 4, 1e-6), Some(4));
        let decreasing: Vec<f64> = (0..50).map(|i| 10.0 - i as f64 * 0.1).collect();
        assert_eq!(detect_plateau(&decreasing, 5, 0.1), None);
        assert_eq!(detect_plateau(&[5.0, 4.0, 3.0, 3.0, 3.0], 3, 1e-9), Some(5));
        assert_eq!(detect_plateau(&[1.0, 1.0], 3, 1.0), None);
        assert_eq!(detect_plateau(&[1.0, 1.0], 0, 1.0), None);
    }

    #[test]
    fn reproducible() {
        let c: Vec<String> = include_str!("../../fixtures/otf_corpus.txt").lines().map(String::from).collect();
        let cfg = LoopConfig {
            max_steps: 40,
            eval_every: 20,
            seed: 3,
            ..Default::default()
        };
        let a = run_loop(&c, &mut ToyCipherTranslator::new(&c, 3), &cfg).unwrap();
        let b = run_loop(&c, &mut ToyCipherTranslator::new(&c, 3), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
