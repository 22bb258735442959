use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid teacher config: {0}")]
    Invalid(String),
    #[error("cannot read teacher config {path}: {reason}")]
    Load { path: String, reason: String },
}

/// Endpoint, pricing and scheduling settings for the teacher model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_parallel: usize,
    pub max_retries: u32,
    #[serde(with = "rust_decimal::serde::str")]
    pub price_per_1k_input_tokens: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub price_per_1k_output_tokens: Decimal,
    pub temperature: f64,
    /// First backoff delay; doubles on each retry.
    pub retry_base_ms: u64,
    pub timeout_secs: u64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_parallel: 4,
            max_retries: 3,
            price_per_1k_input_tokens: Decimal::new(3, 2),
            price_per_1k_output_tokens: Decimal::new(6, 2),
            temperature: 0.0,
            retry_base_ms: 500,
            timeout_secs: 120,
        }
    }
}

impl TeacherConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_parallel == 0 {
            return Err(ConfigError::Invalid("max_parallel must be at least 1".into()));
        }
        if self.price_per_1k_input_tokens.is_sign_negative() || self.price_per_1k_output_tokens.is_sign_negative() {
            return Err(ConfigError::Invalid("prices must be non-negative".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Invalid(format!(
                "temperature must be in [0, 2], got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Read a TOML config; missing keys take their defaults.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let load_err = |reason: String| ConfigError::Load {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| load_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: TeacherConfig = toml::from_str(
            "model_name = \"m\"\nprice_per_1k_input_tokens = \"0.01\"\nmax_parallel = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.model_name, "m");
        assert_eq!(cfg.price_per_1k_input_tokens, Decimal::new(1, 2));
        assert_eq!(cfg.price_per_1k_output_tokens, Decimal::new(6, 2));
        assert_eq!(cfg.temperature, 0.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = TeacherConfig {
            max_parallel: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.max_parallel = 1;
        cfg.temperature = 2.5;
        assert!(cfg.validate().is_err());
        cfg.temperature = 1.0;
        cfg.price_per_1k_output_tokens = Decimal::new(-1, 0);
        assert!(cfg.validate().is_err());
        assert!(toml::from_str::<TeacherConfig>("bogus = 1").is_err());
    }
}
