//! Code vectors: attention-pooled embeddings of path-context bags, trained
//! by predicting method names.

mod model;
mod train;
mod vocab;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::pathctx::ContextBag;

pub use model::{log_sum_exp, softmax, Dims, EmbedderParams, EncodedContext, Forward, Gradients};
pub use train::{train_embedder, TrainConfig, TrainedEmbedder};
pub use vocab::{Vocab, Vocabularies, UNK};

pub const EMBEDDER_FORMAT: &str = "mmrec.embedder";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("empty bag for {0}")]
    EmptyBag(String),
    #[error("need at least 2 distinct method names to train, found {0}")]
    VocabTooSmall(usize),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// Fixed-length embedding of a method or class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeVector {
    pub values: Vec<f64>,
    pub source: String,
}

impl CodeVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Vocabularies plus parameters: everything needed to embed a bag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedder {
    pub vocabs: Vocabularies,
    pub params: EmbedderParams,
}

impl Embedder {
    pub fn dim(&self) -> usize {
        self.params.dims.code
    }

    /// Maps tokens and paths to rows; unseen ones go to UNK.
    pub fn encode(&self, bag: &ContextBag) -> Vec<EncodedContext> {
        bag.contexts
            .iter()
            .map(|c| {
                (
                    self.vocabs.tokens.get_or_unk(&c.start_token),
                    self.vocabs.paths.get_or_unk(&c.path_string()),
                    self.vocabs.tokens.get_or_unk(&c.end_token),
                )
            })
            .collect()
    }

    pub fn forward(&self, bag: &ContextBag) -> Result<Forward, EmbedError> {
        if bag.contexts.is_empty() {
            return Err(EmbedError::EmptyBag(bag.method_id.0.clone()));
        }
        Ok(self.params.forward(&self.encode(bag)))
    }

    pub fn embed_bag(&self, bag: &ContextBag) -> Result<CodeVector, EmbedError> {
        let fwd = self.forward(bag)?;
        Ok(CodeVector {
            values: fwd.code.to_vec(),
            source: bag.method_id.0.clone(),
        })
    }

    /// Index into `vocabs.names` of the most likely name.
    pub fn predict_name(&self, bag: &ContextBag) -> Result<usize, EmbedError> {
        let fwd = self.forward(bag)?;
        let logits = self.params.logits(&fwd.code);
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        artifact::write_object(path, EMBEDDER_FORMAT, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let e: Embedder = artifact::read_object(path, EMBEDDER_FORMAT)?;
        e.check_shapes()
            .map_err(|reason| ArtifactError::CorruptFile {
                path: path.to_path_buf(),
                reason,
            })?;
        Ok(e)
    }

    fn check_shapes(&self) -> Result<(), String> {
        let p = &self.params;
        let d = p.dims;
        let ok = p.token_matrix.dim() == (self.vocabs.tokens.len(), d.token)
            && p.path_matrix.dim() == (self.vocabs.paths.len(), d.path)
            && p.fc_weight.dim() == (d.code, d.context_width())
            && p.fc_bias.len() == d.code
            && p.attention.len() == d.code
            && p.output.dim() == (d.code, self.vocabs.names.len());
        if ok {
            Ok(())
        } else {
            Err("matrix shapes disagree with dimension header".into())
        }
    }
}
