//! Run configuration, read from TOML. Relative paths resolve against the
//! directory holding the config file.
//!
//! ```toml
//! seed = 0
//!
//! [input]
//! left = "left.json"
//! right = "right.json"
//! reference = "reference.json"   # needed by `train`
//! embeddings = "vectors.emb"     # needed when embedding.backend = "file"
//! # stopwords = "stopwords.txt"
//! # abbreviations = "abbreviations.tsv"
//!
//! [embedding]
//! backend = "file"               # or "hash"
//! dim = 512                      # hash backend only; file rows carry their own
//! granularity = "label-sentence" # or "token-mean"
//!
//! [model]
//! hidden_dim = 64
//! output_dim = 256
//! max_neighbors = 8
//! activation = "elu"             # identity | sigmoid | tanh
//! leaky_slope = 0.2
//!
//! [train]
//! learning_rate = 0.01
//! epochs = 5
//! weight_decay = 0.001
//! batch_size = 16
//! negative_ratio = 5
//! validation_fraction = 0.2
//!
//! [output]
//! checkpoint = "out/model.json"
//! threshold = "out/threshold.txt"
//! loss = "out/loss.csv"
//! alignment_tsv = "out/alignment.tsv"
//! alignment_rdf = "out/alignment.rdf"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::embedding::Granularity;
use crate::error::{Error, Result};
use crate::gat::{Activation, ModelConfig};
use crate::neighborhood::DEFAULT_MAX_NEIGHBORS;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub left: PathBuf,
    pub right: PathBuf,
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub abbreviations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    File,
    Hash,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub backend: Backend,
    pub dim: usize,
    pub granularity: Granularity,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            backend: Backend::File,
            dim: 512,
            granularity: Granularity::LabelSentence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub max_neighbors: usize,
    pub activation: Activation,
    pub leaky_slope: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::new(1);
        ModelSection {
            hidden_dim: m.hidden_dim,
            output_dim: m.output_dim,
            max_neighbors: DEFAULT_MAX_NEIGHBORS,
            activation: m.activation,
            leaky_slope: m.leaky_slope,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self, input_dim: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden_dim: self.hidden_dim,
            output_dim: self.output_dim,
            leaky_slope: self.leaky_slope,
            activation: self.activation,
        }
    }
}

/// Training hyperparameters; the seed comes from the top level.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub negative_ratio: usize,
    pub validation_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            weight_decay: t.weight_decay,
            batch_size: t.batch_size,
            negative_ratio: t.negative_ratio,
            validation_fraction: t.validation_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub checkpoint: PathBuf,
    pub threshold: PathBuf,
    pub loss: PathBuf,
    pub alignment_tsv: PathBuf,
    pub alignment_rdf: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub input: InputPaths,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    pub output: OutputPaths,
}

impl RunConfig {
    /// Parses and validates; relative paths are joined onto `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound("config file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.input;
        join(&mut i.left);
        join(&mut i.right);
        for p in [
            &mut i.reference,
            &mut i.embeddings,
            &mut i.stopwords,
            &mut i.abbreviations,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
        let o = &mut self.output;
        for p in [
            &mut o.checkpoint,
            &mut o.threshold,
            &mut o.loss,
            &mut o.alignment_tsv,
            &mut o.alignment_rdf,
        ] {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.model.model_config(1).validate()?;
        if self.model.max_neighbors == 0 {
            return Err(Error::Config("max_neighbors must be at least 1".into()));
        }
        match self.embedding.backend {
            Backend::File if self.input.embeddings.is_none() => {
                return Err(Error::Config(
                    "embedding backend \"file\" needs input.embeddings".into(),
                ))
            }
            Backend::Hash if self.embedding.dim == 0 => {
                return Err(Error::Config("embedding dim must be positive".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            weight_decay: t.weight_decay,
            batch_size: t.batch_size,
            negative_ratio: t.negative_ratio,
            seed: self.seed,
            validation_fraction: t.validation_fraction,
        }
    }
}
