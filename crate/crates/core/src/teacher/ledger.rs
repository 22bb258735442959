use std::collections::BTreeMap;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::TeacherConfig;
use crate::dataset::Method;

/// Token usage reported for one completion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    #[serde(with = "rust_decimal::serde::str")]
    pub estimated_cost: Decimal,
}

impl LedgerEntry {
    /// `estimated_cost / max(1, requests)`.
    pub fn cost_per_proof(&self) -> Decimal {
        self.estimated_cost / Decimal::from(self.requests.max(1))
    }
}

/// Cumulative teacher usage and spend per generation method.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub methods: BTreeMap<Method, LedgerEntry>,
}

/// Exact price of `usage` under the config's per-1k rates.
pub fn price(usage: Usage, cfg: &TeacherConfig) -> Decimal {
    Decimal::from(usage.prompt_tokens) * cfg.price_per_1k_input_tokens / Decimal::ONE_THOUSAND
        + Decimal::from(usage.completion_tokens) * cfg.price_per_1k_output_tokens / Decimal::ONE_THOUSAND
}

impl CostLedger {
    /// Count one request with its (possibly multi-attempt) usage.
    pub fn record(&mut self, method: Method, usage: Usage, cfg: &TeacherConfig) {
        let e = self.methods.entry(method).or_default();
        e.requests += 1;
        e.input_tokens += usage.prompt_tokens;
        e.output_tokens += usage.completion_tokens;
        e.estimated_cost += price(usage, cfg);
    }

    pub fn entry(&self, method: Method) -> LedgerEntry {
        self.methods.get(&method).cloned().unwrap_or_default()
    }

    pub fn total_cost(&self) -> Decimal {
        self.methods.values().map(|e| e.estimated_cost).sum()
    }

    pub fn total_requests(&self) -> u64 {
        self.methods.values().map(|e| e.requests).sum()
    }

    pub fn merge(&mut self, other: &CostLedger) {
        for (m, o) in &other.methods {
            let e = self.methods.entry(*m).or_default();
            e.requests += o.requests;
            e.input_tokens += o.input_tokens;
            e.output_tokens += o.output_tokens;
            e.estimated_cost += o.estimated_cost;
        }
    }

    /// Plain-text per-method summary.
    pub fn report(&self) -> String {
        let mut out = String::from("method\trequests\tinput_tokens\toutput_tokens\testimated_cost\tcost_per_proof\n");
        for (m, e) in &self.methods {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                m.as_str(),
                e.requests,
                e.input_tokens,
                e.output_tokens,
                e.estimated_cost.round_dp(6).normalize(),
                e.cost_per_proof().round_dp(6).normalize()
            ));
        }
        out
    }
}

/// Projected spend for `n_proofs` proofs at `avg_tokens` = (input, output)
/// tokens per proof. The method only labels the estimate; pricing comes
/// from the config.
pub fn estimate_cost(_method: Method, n_proofs: u64, cfg: &TeacherConfig, avg_tokens: (u64, u64)) -> Decimal {
    let per_proof = price(
        Usage {
            prompt_tokens: avg_tokens.0,
            completion_tokens: avg_tokens.1,
        },
        cfg,
    );
    per_proof * Decimal::from(n_proofs)
}
