//! Recommendation (candidate classes → probabilities → decision) and
//! evaluation against injected ground truth.

mod metrics;
pub mod stages;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::artifact::ArtifactError;
use crate::config::ConfigError;
use crate::corpus::{Corpus, CorpusError};
use crate::embed::{CodeVector, EmbedError, Embedder};
use crate::featurize::{class_embedding, make_pair_vector, FeatureError, PcaModel};
use crate::frontend::{ClassId, MethodId};
use crate::injector::{find_candidates, InjectError, MovableFilter};
use crate::pathctx::{extract_contexts, ContextBag, ExtractionLimits};
use crate::svm::{predict_proba, PlattParams, SvmError, SvmModel};

pub use metrics::{
    evaluate, f1_score, random_baseline, summary_table, EvalReport, ProjectRow, Scores,
};
pub use stages::{run_end_to_end, EndToEnd, RunPaths};

pub const BUNDLE_FORMAT: &str = "mmrec.bundle";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("missing artifact: {0} (run the stage that produces it first)")]
    MissingArtifact(std::path::PathBuf),
    #[error(transparent)]
    Artifact(ArtifactError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(EmbedError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error("{0}: no candidate classes")]
    NoCandidates(MethodId),
    #[error("{method}: cannot embed: {reason}")]
    EmbeddingFailure { method: MethodId, reason: String },
    #[error("{stage}: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

impl From<ArtifactError> for PipelineError {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Missing(p) => PipelineError::MissingArtifact(p),
            other => PipelineError::Artifact(other),
        }
    }
}

impl From<EmbedError> for PipelineError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Artifact(a) => a.into(),
            other => PipelineError::Embed(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub seed: u64,
    pub raw_dim: usize,
    pub reduced_dim: usize,
    pub explained_variance: f64,
    pub train_examples: usize,
    pub validate_examples: usize,
    pub test_examples: usize,
    /// Accuracy of thresholded probabilities on the test partition.
    pub test_accuracy: f64,
}

/// Everything needed to score a (method, class) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub embedder: Embedder,
    pub limits: ExtractionLimits,
    pub pca: PcaModel,
    pub svm: SvmModel,
    pub platt: PlattParams,
    pub meta: BundleMeta,
}

impl ModelBundle {
    /// Probability that `class_vec` is the right home of `method_vec`.
    pub fn probability(
        &self,
        method_vec: &CodeVector,
        class_vec: &CodeVector,
    ) -> Result<f64, PipelineError> {
        let raw = make_pair_vector(
            method_vec,
            class_vec,
            MethodId(String::new()),
            ClassId(String::new()),
        )?;
        self.probability_raw(&raw.values)
    }

    pub fn probability_raw(&self, raw: &[f64]) -> Result<f64, PipelineError> {
        let z = self.pca.project(raw)?;
        Ok(predict_proba(&self.svm, &self.platt, &z)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Move,
    Stay,
    NoRecommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class_id: ClassId,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub method_id: MethodId,
    pub origin_class_id: ClassId,
    pub best_class_id: ClassId,
    pub probability: f64,
    pub decision: Decision,
    /// Every scored candidate, origin included, sorted by class id.
    pub candidates: Vec<ClassScore>,
}

/// Picks the best class and applies the threshold rule.
///
/// Highest probability wins; the origin wins ties, then the smallest class
/// id. A maximum at or below `threshold` gives `NoRecommendation`.
pub fn decide(origin: &ClassId, scores: &[ClassScore], threshold: f64) -> (ClassId, f64, Decision) {
    let mut best: Option<&ClassScore> = None;
    for s in scores {
        best = match best {
            None => Some(s),
            Some(b) => {
                let better = s.probability > b.probability
                    || (s.probability == b.probability
                        && (&s.class_id == origin
                            || (&b.class_id != origin && s.class_id < b.class_id)));
                Some(if better { s } else { b })
            }
        };
    }
    let Some(best) = best else {
        return (origin.clone(), 0.0, Decision::NoRecommendation);
    };
    let decision = if best.probability <= threshold {
        Decision::NoRecommendation
    } else if &best.class_id == origin {
        Decision::Stay
    } else {
        Decision::Move
    };
    (best.class_id.clone(), best.probability, decision)
}

/// Method name and bag of every method in the corpus, in corpus order.
pub fn extract_corpus(corpus: &Corpus, limits: &ExtractionLimits) -> Vec<(ContextBag, String)> {
    let methods: Vec<_> = corpus.methods().map(|(_, m)| m).collect();
    methods
        .par_iter()
        .map(|m| (extract_contexts(m, limits), m.name.clone()))
        .collect()
}

/// Code vectors of every method with a non-empty bag.
pub fn method_vectors<'a>(
    embedder: &Embedder,
    bags: impl IntoIterator<Item = &'a ContextBag>,
) -> HashMap<MethodId, CodeVector> {
    let bags: Vec<&ContextBag> = bags
        .into_iter()
        .filter(|b| !b.contexts.is_empty())
        .collect();
    bags.par_iter()
        .map(|b| {
            let v = embedder.embed_bag(b).expect("non-empty bag embeds");
            (b.method_id.clone(), v)
        })
        .collect()
}

/// Scores `candidates` (which must include the origin) for one method.
pub fn recommend(
    corpus: &Corpus,
    vectors: &HashMap<MethodId, CodeVector>,
    method_id: &MethodId,
    candidates: &[ClassId],
    bundle: &ModelBundle,
    threshold: f64,
) -> Result<Recommendation, PipelineError> {
    let origin = method_id.class_id();
    if candidates.is_empty() || !candidates.contains(&origin) {
        return Err(PipelineError::NoCandidates(method_id.clone()));
    }
    let failure = |reason: String| PipelineError::EmbeddingFailure {
        method: method_id.clone(),
        reason,
    };
    let mvec = vectors
        .get(method_id)
        .ok_or_else(|| failure("method has no code vector".into()))?;
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let class = corpus
            .class(c)
            .ok_or_else(|| failure(format!("class {c} not in corpus")))?;
        let exclude = (c == &origin).then_some(method_id);
        let cvec = match class_embedding(class, vectors, exclude) {
            Ok(v) => v,
            Err(FeatureError::NoMethods(_)) if c != &origin => {
                warn!(method = %method_id, class = %c, "candidate class has no embeddable methods");
                continue;
            }
            Err(e) => return Err(failure(e.to_string())),
        };
        scores.push(ClassScore {
            class_id: c.clone(),
            probability: bundle.probability(mvec, &cvec)?,
        });
    }
    scores.sort_by(|a, b| a.class_id.cmp(&b.class_id));
    let (best_class_id, probability, decision) = decide(&origin, &scores, threshold);
    Ok(Recommendation {
        method_id: method_id.clone(),
        origin_class_id: origin,
        best_class_id,
        probability,
        decision,
        candidates: scores,
    })
}

/// Recommendations for every candidate method of the corpus (origin plus
/// parameter-type classes, relaxed filter), sorted by method id. Methods
/// that cannot be embedded are skipped with a warning.
pub fn recommend_corpus(
    corpus: &Corpus,
    bundle: &ModelBundle,
    threshold: f64,
) -> Vec<Recommendation> {
    let bags = extract_corpus(corpus, &bundle.limits);
    let vectors = method_vectors(&bundle.embedder, bags.iter().map(|(b, _)| b));
    let candidates = find_candidates(corpus, MovableFilter::RELAXED);
    let mut out: Vec<Recommendation> = candidates
        .par_iter()
        .filter_map(|cand| {
            let mut classes = vec![cand.origin_class_id.clone()];
            classes.extend(cand.target_class_ids.iter().cloned());
            match recommend(
                corpus,
                &vectors,
                &cand.method_id,
                &classes,
                bundle,
                threshold,
            ) {
                Ok(r) => Some(r),
                Err(e) => {
                    warn!(error = %e, "no recommendation");
                    None
                }
            }
        })
        .collect();
    out.sort_by(|a, b| a.method_id.cmp(&b.method_id));
    out
}
