//! Template-based informalization of classified tactic lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Method, PairRecord};
use crate::parser::{classify_proof, TacticKind, TacticMatch, TheoremRecord};

/// Informal side used when a proof has no recognised tactic line.
pub const NO_TACTICS_SENTINEL: &str = "(no recognized tactics)";

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("missing slot `{0}`")]
    MissingSlot(String),
    #[error("unknown tactic kind `{0}` in template file")]
    UnknownKind(String),
    #[error("template for `{kind}` uses slot `{slot}`, which that kind does not capture")]
    UnknownSlot { kind: TacticKind, slot: String },
    #[error("template for `{0}` has an unterminated `{{`")]
    Unterminated(TacticKind),
    #[error("cannot read template file {path}: {reason}")]
    Load { path: String, reason: String },
}

/// One template per tactic kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateTable {
    templates: [String; 10],
}

impl Default for TemplateTable {
    fn default() -> Self {
        let t = |s: &str| s.to_string();
        Self {
            templates: [
                t("We are beginning a proof by induction on {variable}."),
                t("Here, we apply the theorem/lemma {theorem_name}."),
                t("We're rewriting part of the expression using {equality_statement}."),
                t("This step concludes that both sides of our equation are identical."),
                t("We're breaking down the problem into cases based on {variable_or_condition}."),
                t("We introduce new variables {variable_names}."),
                t("We simplify the current expression or goal using the simp tactic."),
                t("This step shows that our assumptions lead to a contradiction."),
                t("Here, we provide the exact term {term_name} that solves our current goal."),
                t("We define a function {function_name} that takes {parameters}."),
            ],
        }
    }
}

impl TemplateTable {
    pub fn get(&self, kind: TacticKind) -> &str {
        &self.templates[kind as usize]
    }

    /// Replace one template after checking its placeholders.
    pub fn set(&mut self, kind: TacticKind, template: impl Into<String>) -> Result<(), RuleError> {
        let template = template.into();
        for slot in placeholders(&template).map_err(|_| RuleError::Unterminated(kind))? {
            if !kind.slot_names().contains(&slot) {
                return Err(RuleError::UnknownSlot {
                    kind,
                    slot: slot.to_string(),
                });
            }
        }
        self.templates[kind as usize] = template;
        Ok(())
    }

    /// Defaults overlaid with a `kind = "template"` mapping.
    pub fn with_overrides(overrides: &BTreeMap<String, String>) -> Result<Self, RuleError> {
        let mut table = Self::default();
        for (kind, template) in overrides {
            let kind: TacticKind = kind
                .parse()
                .map_err(|_| RuleError::UnknownKind(kind.clone()))?;
            table.set(kind, template.clone())?;
        }
        Ok(table)
    }

    /// Load overrides from a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, RuleError> {
        let load_err = |reason: String| RuleError::Load {
            path: path.display().to_string(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let overrides: BTreeMap<String, String> =
            if path.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))?
            } else {
                toml::from_str(&text).map_err(|e| load_err(e.to_string()))?
            };
        Self::with_overrides(&overrides)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TacticKind, &str)> {
        TacticKind::ALL.into_iter().map(|k| (k, self.get(k)))
    }
}

/// Slot names referenced by `{name}` placeholders, in order.
fn placeholders(template: &str) -> Result<Vec<&str>, ()> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let close = rest[open..].find('}').ok_or(())? + open;
        out.push(&rest[open + 1..close]);
        rest = &rest[close + 1..];
    }
    Ok(out)
}

/// Fill the template for `m.kind` with the match's slot values.
///
/// Substitution is single-pass: braces inside slot values are copied
/// through literally.
pub fn informalize_tactic(m: &TacticMatch, table: &TemplateTable) -> Result<String, RuleError> {
    let template = table.get(m.kind);
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let Some(close) = rest[open..].find('}').map(|c| c + open) else {
            break;
        };
        let name = &rest[open + 1..close];
        let value = m
            .slot(name)
            .ok_or_else(|| RuleError::MissingSlot(name.to_string()))?;
        out.push_str(value);
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// A rule-generated pair plus how much of the proof it covered.
#[derive(Debug, Clone, Serialize)]
pub struct RulePair {
    pub pair: PairRecord,
    pub matched: usize,
    pub fragments: usize,
}

impl RulePair {
    pub fn coverage(&self) -> f64 {
        if self.fragments == 0 {
            0.0
        } else {
            self.matched as f64 / self.fragments as f64
        }
    }
}

/// Informalize a whole proof: one sentence per recognised tactic, joined by
/// a single space, in proof order.
pub fn informalize_proof(record: &TheoremRecord, table: &TemplateTable) -> Result<RulePair, RuleError> {
    let classified = classify_proof(record);
    let sentences = classified
        .matches
        .iter()
        .map(|m| informalize_tactic(m, table))
        .collect::<Result<Vec<_>, _>>()?;
    let pair = if sentences.is_empty() {
        PairRecord::new(record.formal_text(), NO_TACTICS_SENTINEL, Method::Regex, &record.id)
            .flagged_low_quality()
    } else {
        PairRecord::new(record.formal_text(), sentences.join(" "), Method::Regex, &record.id)
    };
    Ok(RulePair {
        pair,
        matched: classified.matches.len(),
        fragments: classified.fragments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::classify_tactic;

    fn record(body: &str) -> TheoremRecord {
        TheoremRecord {
            id: "f.lean:1:t".into(),
            name: "t".into(),
            statement: "theorem t (p : Prop) : p → p".into(),
            proof_body: body.into(),
            source_file: "f.lean".into(),
            line_start: 1,
            line_end: 2,
        }
    }

    #[test]
    fn induction_and_reflexivity() {
        let t = TemplateTable::default();
        let m = classify_tactic("induction n with k ih").unwrap();
        assert_eq!(
            informalize_tactic(&m, &t).unwrap(),
            "We are beginning a proof by induction on n."
        );
        let m = classify_tactic("refl").unwrap();
        assert_eq!(
            informalize_tactic(&m, &t).unwrap(),
            "This step concludes that both sides of our equation are identical."
        );
    }

    #[test]
    fn apply_fills_theorem_name() {
        let m = classify_tactic("apply mul_comm").unwrap();
        assert_eq!(
            informalize_tactic(&m, &TemplateTable::default()).unwrap(),
            "Here, we apply the theorem/lemma mul_comm."
        );
    }

    #[test]
    fn missing_slot() {
        let m = TacticMatch {
            kind: TacticKind::Apply,
            raw_line: "apply".into(),
            slots: vec![],
        };
        assert_eq!(
            informalize_tactic(&m, &TemplateTable::default()),
            Err(RuleError::MissingSlot("theorem_name".into()))
        );
    }

    #[test]
    fn braces_in_values_are_literal() {
        let m = classify_tactic("exact {x := 1}").unwrap();
        assert_eq!(
            informalize_tactic(&m, &TemplateTable::default()).unwrap(),
            "Here, we provide the exact term {x := 1} that solves our current goal."
        );
    }

    #[test]
    fn proof_examples() {
        let t = TemplateTable::default();
        let p = informalize_proof(&record("intro h\nexact h"), &t).unwrap();
        assert_eq!(
            p.pair.informal,
            "We introduce new variables h. Here, we provide the exact term h that solves our current goal."
        );
        assert_eq!(p.pair.method, Method::Regex);
        assert_eq!(p.pair.formal, "theorem t (p : Prop) : p → p := intro h\nexact h");
        assert_eq!(p.pair.source, "f.lean:1:t");
        assert!(!p.pair.low_quality);

        let p = informalize_proof(&record("rfl"), &t).unwrap();
        assert_eq!(p.pair.informal, t.get(TacticKind::Reflexivity));

        let p = informalize_proof(&record("nlinarith"), &t).unwrap();
        assert_eq!(p.pair.informal, NO_TACTICS_SENTINEL);
        assert!(p.pair.low_quality);
        assert_eq!(p.coverage(), 0.0);
    }

    #[test]
    fn overrides() {
        let mut o = BTreeMap::new();
        o.insert("apply".to_string(), "Apply {theorem_name}.".to_string());
        let t = TemplateTable::with_overrides(&o).unwrap();
        assert_eq!(t.get(TacticKind::Apply), "Apply {theorem_name}.");
        assert_eq!(t.get(TacticKind::Exact), TemplateTable::default().get(TacticKind::Exact));

        o.insert("ring".to_string(), "x".to_string());
        assert_eq!(TemplateTable::with_overrides(&o), Err(RuleError::UnknownKind("ring".into())));

        let mut o = BTreeMap::new();
        o.insert("apply".to_string(), "Apply {term_name}.".to_string());
        assert!(matches!(TemplateTable::with_overrides(&o), Err(RuleError::UnknownSlot { .. })));
        o.insert("apply".to_string(), "Apply {theorem_name.".to_string());
        assert!(matches!(TemplateTable::with_overrides(&o), Err(RuleError::Unterminated(_))));
    }

    #[test]
    fn default_placeholders_are_valid_slots() {
        for (kind, template) in TemplateTable::default().iter() {
            for slot in placeholders(template).unwrap() {
                assert!(kind.slot_names().contains(&slot), "{kind}: {slot}");
            }
        }
    }
}
