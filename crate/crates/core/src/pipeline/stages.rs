//! The workflow as a sequence of stages, each reading the artifacts of the
//! previous ones from the output directory and writing its own.

use std::fs;
use std::path::{Path, PathBuf};

use tracing::{info, warn};

use super::{evaluate as score, extract_corpus, method_vectors, recommend_corpus, summary_table};
use super::{BundleMeta, EvalReport, ModelBundle, PipelineError, Recommendation, BUNDLE_FORMAT};
use crate::artifact::{
    read_lines, read_object, read_records, require, write_lines, write_object, write_records,
    ArtifactError,
};
use crate::config::RunConfig;
use crate::corpus::{Corpus, CorpusError};
use crate::embed::{train_embedder, Embedder};
use crate::featurize::fit_pca;
use crate::injector::{self, find_movable, split_dataset_with, GroundTruthEntry, LabeledExample};
use crate::pathctx::ContextBag;
use crate::svm::{fit_platt, predict_proba, train_svm, SvmError};

pub const CONTEXTS_FORMAT: &str = "mmrec.contexts";
pub const DATASET_FORMAT: &str = "mmrec.dataset";
pub const GROUND_TRUTH_FORMAT: &str = "mmrec.ground_truth";
pub const RECOMMENDATIONS_FORMAT: &str = "mmrec.recommendations";
pub const REPORT_FORMAT: &str = "mmrec.report";

/// Artifact locations below the output directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn contexts(&self) -> PathBuf {
        self.root.join("contexts.tsv")
    }
    pub fn embedder(&self) -> PathBuf {
        self.root.join("embedder.json")
    }
    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.jsonl")
    }
    pub fn bundle(&self) -> PathBuf {
        self.root.join("bundle.json")
    }
    pub fn injected(&self) -> PathBuf {
        self.root.join("injected")
    }
    pub fn ground_truth(&self) -> PathBuf {
        self.root.join("ground_truth.jsonl")
    }
    pub fn recommendations(&self) -> PathBuf {
        self.root.join("recommendations.jsonl")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.txt")
    }
}

fn write_bags(path: &Path, bags: &[ContextBag]) -> Result<(), PipelineError> {
    write_lines(path, CONTEXTS_FORMAT, bags.iter().map(ContextBag::to_line))?;
    Ok(())
}

/// Bags with their method names, recovered from the method ids.
fn read_bags(path: &Path) -> Result<Vec<(ContextBag, String)>, PipelineError> {
    let corrupt = |reason: String| ArtifactError::CorruptFile {
        path: path.to_path_buf(),
        reason,
    };
    read_lines(path, CONTEXTS_FORMAT)?
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let bag = ContextBag::from_line(l).map_err(corrupt)?;
            let name = bag
                .method_id
                .signature()
                .map(|(n, _)| n.to_string())
                .ok_or_else(|| corrupt(format!("bad method id {}", bag.method_id)))?;
            Ok((bag, name))
        })
        .collect()
}

fn paths(cfg: &RunConfig) -> RunPaths {
    RunPaths::new(&cfg.output)
}

fn load_corpus(root: &Path) -> Result<Corpus, PipelineError> {
    Corpus::load(root).map_err(|e| match e {
        CorpusError::MissingRoot(p) => PipelineError::MissingArtifact(p),
        other => other.into(),
    })
}

fn io_stage(stage: &'static str, path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Stage {
        stage,
        message: format!("{}: {e}", path.display()),
    }
}

/// Path-context bags of every method of the training corpus.
pub fn extract(cfg: &RunConfig) -> Result<usize, PipelineError> {
    let corpus = load_corpus(&cfg.corpus.train)?;
    let bags: Vec<ContextBag> = extract_corpus(&corpus, &cfg.extraction)
        .into_iter()
        .map(|(bag, _)| bag)
        .collect();
    write_bags(&paths(cfg).contexts(), &bags)?;
    info!(methods = bags.len(), "extracted contexts");
    Ok(bags.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedSummary {
    pub loss_history: Vec<f64>,
    pub train_accuracy: f64,
}

pub fn train_embed(cfg: &RunConfig) -> Result<EmbedSummary, PipelineError> {
    let p = paths(cfg);
    let data = read_bags(&p.contexts())?;
    let trained = train_embedder(&data, &cfg.embedder)?;
    trained.embedder.save(&p.embedder())?;
    info!(
        loss = trained.loss_history.last().copied().unwrap_or(f64::NAN),
        accuracy = trained.train_accuracy,
        "trained embedder"
    );
    Ok(EmbedSummary {
        loss_history: trained.loss_history,
        train_accuracy: trained.train_accuracy,
    })
}

/// Labeled (method, class) pairs from the training corpus.
pub fn build_dataset(cfg: &RunConfig) -> Result<usize, PipelineError> {
    let p = paths(cfg);
    let embedder = Embedder::load(&p.embedder())?;
    let bags = read_bags(&p.contexts())?;
    let corpus = load_corpus(&cfg.corpus.train)?;
    let vectors = method_vectors(&embedder, bags.iter().map(|(b, _)| b));
    let candidates = find_movable(&corpus);
    let dataset = injector::build_dataset(&corpus, &vectors, &candidates);
    write_records(&p.dataset(), DATASET_FORMAT, &dataset)?;
    info!(
        candidates = candidates.len(),
        examples = dataset.len(),
        "built dataset"
    );
    Ok(dataset.len())
}

fn reduce(
    bundle_pca: &crate::featurize::PcaModel,
    set: &[LabeledExample],
) -> Result<Vec<(Vec<f64>, bool)>, PipelineError> {
    set.iter()
        .map(|e| Ok((bundle_pca.project(&e.feature)?, e.label == 1)))
        .collect()
}

fn as_refs(v: &[(Vec<f64>, bool)]) -> Vec<(&[f64], bool)> {
    v.iter().map(|(x, y)| (x.as_slice(), *y)).collect()
}

/// Split, PCA, SVM and Platt scaling; writes the model bundle.
pub fn train_clf(cfg: &RunConfig) -> Result<BundleMeta, PipelineError> {
    let p = paths(cfg);
    require(&p.dataset())?;
    let embedder = Embedder::load(&p.embedder())?;
    let dataset: Vec<LabeledExample> = read_records(&p.dataset(), DATASET_FORMAT)?;
    let split = split_dataset_with(dataset, cfg.split, cfg.seed)?;
    let raw: Vec<&[f64]> = split.train.iter().map(|e| e.feature.as_slice()).collect();
    let pca = fit_pca(&raw, cfg.pca)?;
    let train = reduce(&pca, &split.train)?;
    let validate = reduce(&pca, &split.validate)?;
    let test = reduce(&pca, &split.test)?;

    let svm = train_svm(&as_refs(&train), cfg.svm)?;
    let platt = match fit_platt(&svm, &as_refs(&validate)) {
        Ok(pl) => pl,
        Err(SvmError::NoConvergence { best, iterations }) => {
            warn!(iterations, "Platt fit did not converge; using best iterate");
            best
        }
        Err(e) => return Err(e.into()),
    };
    let mut hits = 0usize;
    for (x, y) in &test {
        if (predict_proba(&svm, &platt, x)? > 0.5) == *y {
            hits += 1;
        }
    }
    let meta = BundleMeta {
        seed: cfg.seed,
        raw_dim: pca.input_dim(),
        reduced_dim: pca.k(),
        explained_variance: pca.explained_variance_ratio.iter().sum(),
        train_examples: train.len(),
        validate_examples: validate.len(),
        test_examples: test.len(),
        test_accuracy: if test.is_empty() {
            0.0
        } else {
            hits as f64 / test.len() as f64
        },
    };
    let bundle = ModelBundle {
        embedder,
        limits: cfg.extraction,
        pca,
        svm,
        platt,
        meta: meta.clone(),
    };
    write_object(&p.bundle(), BUNDLE_FORMAT, &bundle)?;
    info!(
        k = meta.reduced_dim,
        test_accuracy = meta.test_accuracy,
        "trained classifier"
    );
    Ok(meta)
}

/// Injects moves into the evaluation corpus and writes the mutated copy
/// plus its ground truth.
pub fn inject(cfg: &RunConfig) -> Result<usize, PipelineError> {
    let p = paths(cfg);
    let corpus = load_corpus(&cfg.corpus.eval)?;
    let (mutated, truth) = injector::inject(&corpus, cfg.inject.moves_per_project, cfg.seed);
    let dir = p.injected();
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| io_stage("inject", &dir, e))?;
    }
    mutated.write(&dir)?;
    write_records(&p.ground_truth(), GROUND_TRUTH_FORMAT, &truth)?;
    info!(moves = truth.len(), "injected moves");
    Ok(truth.len())
}

pub fn recommend(cfg: &RunConfig, threshold: f64) -> Result<Vec<Recommendation>, PipelineError> {
    let p = paths(cfg);
    let bundle: ModelBundle = read_object(&p.bundle(), BUNDLE_FORMAT)?;
    let corpus = load_corpus(&p.injected())?;
    let recs = recommend_corpus(&corpus, &bundle, threshold);
    write_records(&p.recommendations(), RECOMMENDATIONS_FORMAT, &recs)?;
    Ok(recs)
}

/// Scores the recommendations; writes the report and the text summary.
pub fn evaluate(cfg: &RunConfig) -> Result<EvalReport, PipelineError> {
    let p = paths(cfg);
    let recs: Vec<Recommendation> = read_records(&p.recommendations(), RECOMMENDATIONS_FORMAT)?;
    let truth: Vec<GroundTruthEntry> = read_records(&p.ground_truth(), GROUND_TRUTH_FORMAT)?;
    let report = score(&recs, &truth);
    write_object(&p.report(), REPORT_FORMAT, &report)?;
    let summary = p.summary();
    fs::write(&summary, summary_table(&report)).map_err(|e| io_stage("evaluate", &summary, e))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct EndToEnd {
    pub report: EvalReport,
    pub recommendations: Vec<Recommendation>,
    pub ground_truth: Vec<GroundTruthEntry>,
    pub bundle_meta: BundleMeta,
}

/// Every stage in order.
pub fn run_end_to_end(cfg: &RunConfig) -> Result<EndToEnd, PipelineError> {
    cfg.validate()?;
    extract(cfg)?;
    train_embed(cfg)?;
    build_dataset(cfg)?;
    let bundle_meta = train_clf(cfg)?;
    inject(cfg)?;
    let recommendations = recommend(cfg, cfg.threshold)?;
    let report = evaluate(cfg)?;
    let ground_truth = read_records(&paths(cfg).ground_truth(), GROUND_TRUTH_FORMAT)?;
    Ok(EndToEnd {
        report,
        recommendations,
        ground_truth,
        bundle_meta,
    })
}
