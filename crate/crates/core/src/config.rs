//! Optional TOML config file. Every setting resolves as CLI flag, then the
//! config file, then the built-in default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::teacher::TeacherConfig;

#[derive(Debug, Error)]
#[error("cannot load config {path}: {reason}")]
pub struct ConfigFileError {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub tokenizer: TokenizerSection,
    pub extract: ExtractSection,
    pub rules: RulesSection,
    pub teacher: Option<TeacherConfig>,
    pub distill: DistillSection,
    pub assemble: AssembleSection,
    pub split: SplitSection,
    pub otf: OtfSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSection {
    pub vocab: Option<PathBuf>,
    pub merges: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub ascii_fold: Option<bool>,
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesSection {
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSection {
    pub mode: Option<String>,
    pub shots: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub budget: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleSection {
    pub drop_low_quality: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: Option<[f64; 3]>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtfSection {
    pub batch_size: Option<usize>,
    pub max_steps: Option<usize>,
    pub eval_every: Option<usize>,
    pub seed: Option<u64>,
    pub plateau_window: Option<usize>,
    pub plateau_epsilon: Option<f64>,
    pub learning_rate: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let err = |reason: String| ConfigFileError {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        toml::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

/// CLI value if given, else the file value, else the default.
pub fn resolve<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}
