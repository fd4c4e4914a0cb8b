//! Run configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::TrainConfig;
use crate::featurize::PcaPolicy;
use crate::injector::SplitRatio;
use crate::pathctx::ExtractionLimits;
use crate::svm::SvmHyperparams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusPaths {
    /// Projects used to train the embedder and classifier.
    pub train: PathBuf,
    /// Held-out projects that receive injected moves.
    pub eval: PathBuf,
}

impl Default for CorpusPaths {
    fn default() -> Self {
        Self {
            train: PathBuf::from("corpus/train"),
            eval: PathBuf::from("corpus/eval"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectConfig {
    pub moves_per_project: usize,
}

impl Default for InjectConfig {
    fn default() -> Self {
        Self {
            moves_per_project: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed. Copied into every stage that draws random numbers.
    pub seed: u64,
    /// A move is recommended only above this probability.
    pub threshold: f64,
    pub corpus: CorpusPaths,
    /// Directory receiving every artifact of a run.
    pub output: PathBuf,
    pub extraction: ExtractionLimits,
    pub embedder: TrainConfig,
    pub pca: PcaPolicy,
    pub svm: SvmHyperparams,
    pub split: SplitRatio,
    pub inject: InjectConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threshold: 0.5,
            corpus: CorpusPaths::default(),
            output: PathBuf::from("out"),
            extraction: ExtractionLimits::default(),
            embedder: TrainConfig::default(),
            pca: PcaPolicy::default(),
            svm: SvmHyperparams::default(),
            split: SplitRatio::default(),
            inject: InjectConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        let seed = cfg.seed;
        Ok(cfg.with_seed(seed))
    }

    /// Reads, parses and validates a config file. Relative corpus and output
    /// paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        if let Some(dir) = path.parent() {
            cfg.corpus.train = dir.join(&cfg.corpus.train);
            cfg.corpus.eval = dir.join(&cfg.corpus.eval);
            cfg.output = dir.join(&cfg.output);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets the master seed and propagates it to the stages.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.extraction.seed = seed;
        self.embedder.seed = seed;
        self.svm.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = ConfigError::Invalid;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(bad(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        self.extraction.validate().map_err(bad)?;
        self.embedder.validate().map_err(bad)?;
        self.svm.validate().map_err(|e| bad(e.to_string()))?;
        self.split.validate().map_err(bad)?;
        match self.pca {
            PcaPolicy::Variance(v) if !(v > 0.0 && v <= 1.0) => {
                return Err(bad(format!("pca variance must lie in (0, 1], got {v}")))
            }
            PcaPolicy::Fixed(0) => return Err(bad("pca component count must be positive".into())),
            _ => {}
        }
        Ok(())
    }
}
