//! Pipeline configuration: a flat `key = value` text file, with every
//! setting overridable by a CLI flag. `#` starts a comment. Relative paths
//! resolve against the config file's directory.
//!
//! ```text
//! manifest = manifest.tsv
//! kb = kb.tsv
//! gold = gold.tsv
//! out = out
//! doc_mode = per_line
//! epochs = 30
//! seed = 7
//! lambda = 0.2
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::DocMode;
use crate::detect::DetectorConfig;
use crate::embedding::TrainConfig;
use crate::rank::RankerMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("path not found: {path}")]
    PathNotFound { path: PathBuf },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: bad value for {key}: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Corpus manifest for embedding training.
    pub manifest: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    /// Pre-trained embeddings to load instead of training.
    pub embeddings: Option<PathBuf>,
    /// Extra embedding file evaluated as a separate comparison row.
    pub general_embeddings: Option<PathBuf>,
    /// Document to expand; defaults to the manifest's clinical notes.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub doc_mode: DocMode,
    pub train: TrainConfig,
    pub lambda: f64,
    pub mode: RankerMode,
    pub detector: DetectorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifest: None,
            kb: None,
            gold: None,
            embeddings: None,
            general_embeddings: None,
            input: None,
            out: PathBuf::from("out"),
            doc_mode: DocMode::PerFile,
            train: TrainConfig::default(),
            lambda: 0.2,
            mode: RankerMode::Combined,
            detector: DetectorConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<PipelineConfig, ConfigError> {
        if !path.exists() {
            return Err(ConfigError::PathNotFound {
                path: path.to_owned(),
            });
        }
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        PipelineConfig::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: lineno + 1,
                    text: line.to_string(),
                });
            };
            cfg.apply(key.trim(), value.trim(), lineno + 1, base)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize, base: &Path) -> Result<(), ConfigError> {
        fn path_of(base: &Path, value: &str) -> PathBuf {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        }
        fn num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                line,
                key: key.to_string(),
                msg: format!("{value:?} is not a valid number"),
            })
        }

        match key {
            "manifest" => self.manifest = Some(path_of(base, value)),
            "kb" => self.kb = Some(path_of(base, value)),
            "gold" => self.gold = Some(path_of(base, value)),
            "embeddings" => self.embeddings = Some(path_of(base, value)),
            "general_embeddings" => self.general_embeddings = Some(path_of(base, value)),
            "input" => self.input = Some(path_of(base, value)),
            "out" => self.out = path_of(base, value),
            "doc_mode" => {
                self.doc_mode = DocMode::parse(value).ok_or_else(|| ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    msg: format!("{value:?} is not per_file or per_line"),
                })?
            }
            "dim" => self.train.dim = num(key, value, line)?,
            "window" => self.train.window = num(key, value, line)?,
            "negatives" => self.train.negatives = num(key, value, line)?,
            "epochs" => self.train.epochs = num(key, value, line)?,
            "learning_rate" | "lr" => self.train.initial_learning_rate = num(key, value, line)?,
            "min_count" => self.train.min_count = num(key, value, line)?,
            "subsample" => self.train.subsample_threshold = num(key, value, line)?,
            "seed" => self.train.seed = num(key, value, line)?,
            "workers" => self.train.workers = num(key, value, line)?,
            "detect_abbrev_min_len" => self.detector.abbrev_min_len = num(key, value, line)?,
            "detect_abbrev_max_len" => self.detector.abbrev_max_len = num(key, value, line)?,
            "detect_abbrev_min_alpha" => self.detector.abbrev_min_alpha = num(key, value, line)?,
            "detect_lowercase_min_len" => {
                self.detector.lowercase_kb_min_len = num(key, value, line)?
            }
            "detect_lowercase_max_len" => {
                self.detector.lowercase_kb_max_len = num(key, value, line)?
            }
            "lambda" => {
                let v: f64 = num(key, value, line)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.to_string(),
                        msg: format!("lambda must be in [0, 1], got {v}"),
                    });
                }
                self.lambda = v;
            }
            "mode" => {
                self.mode = RankerMode::parse(value).ok_or_else(|| ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    msg: format!("{value:?} is not combined, rating_only or embedding_only"),
                })?
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }
}
