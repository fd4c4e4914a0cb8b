use ndarray::Zip;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::model::{Dims, EmbedderParams, EncodedContext, Gradients};
use super::{EmbedError, Embedder, Vocabularies};
use crate::pathctx::ContextBag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub token_dim: usize,
    pub path_dim: usize,
    pub code_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Tokens and paths seen fewer times than this map to UNK.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            token_dim: 128,
            path_dim: 128,
            code_dim: 384,
            epochs: 20,
            learning_rate: 1e-3,
            batch_size: 32,
            min_count: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.token_dim == 0 || self.path_dim == 0 || self.code_dim == 0 {
            return Err("embedding dimensions must be positive".into());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("learning_rate must be a positive number".into());
        }
        if self.min_count == 0 {
            return Err("min_count must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedEmbedder {
    pub embedder: Embedder,
    /// Mean training loss before the first epoch, then after each epoch.
    pub loss_history: Vec<f64>,
    /// Fraction of training bags whose name is predicted correctly at the end.
    pub train_accuracy: f64,
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    fn new(lr: f64, params: &EmbedderParams) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
        }
    }

    fn update(&mut self, params: &mut EmbedderParams, grads: &Gradients) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let lr_t = self.lr * (1.0 - b2.powi(self.step)).sqrt() / (1.0 - b1.powi(self.step));
        let eps = self.eps;
        let g = grads.groups();
        let m_groups = grads_mut(&mut self.m);
        let v_groups = grads_mut(&mut self.v);
        for ((((_, p), (_, g)), m), v) in params
            .groups_mut()
            .into_iter()
            .zip(g)
            .zip(m_groups)
            .zip(v_groups)
        {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_t * *m / (v.sqrt() + eps);
            });
        }
    }
}

fn grads_mut(g: &mut Gradients) -> [&mut [f64]; 6] {
    [
        g.token_matrix.as_slice_mut().expect("standard layout"),
        g.path_matrix.as_slice_mut().expect("standard layout"),
        g.fc_weight.as_slice_mut().expect("standard layout"),
        g.fc_bias.as_slice_mut().expect("standard layout"),
        g.attention.as_slice_mut().expect("standard layout"),
        g.output.as_slice_mut().expect("standard layout"),
    ]
}

fn mean_loss(params: &EmbedderParams, data: &[(Vec<EncodedContext>, usize)]) -> f64 {
    let losses: Vec<f64> = data.par_iter().map(|(c, y)| params.loss(c, *y)).collect();
    losses.iter().sum::<f64>() / data.len() as f64
}

/// Trains vocabularies and encoder parameters by minimizing the cross-entropy
/// of predicting each bag's method name. Deterministic for a given seed:
/// per-example gradients may be computed in parallel but are always summed
/// in batch order.
pub fn train_embedder(
    corpus: &[(ContextBag, String)],
    config: &TrainConfig,
) -> Result<TrainedEmbedder, EmbedError> {
    config.validate().map_err(EmbedError::Config)?;
    let usable: Vec<&(ContextBag, String)> = corpus
        .iter()
        .filter(|(b, _)| !b.contexts.is_empty())
        .collect();
    if usable.len() < corpus.len() {
        warn!(
            skipped = corpus.len() - usable.len(),
            "skipping methods with empty bags"
        );
    }
    let vocabs = Vocabularies::build(
        usable.iter().map(|(b, n)| (b, n.as_str())),
        config.min_count,
    );
    if vocabs.names.len() < 2 {
        return Err(EmbedError::VocabTooSmall(vocabs.names.len()));
    }

    let dims = Dims {
        token: config.token_dim,
        path: config.path_dim,
        code: config.code_dim,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = EmbedderParams::init(
        dims,
        vocabs.tokens.len(),
        vocabs.paths.len(),
        vocabs.names.len(),
        &mut rng,
    );
    let mut embedder = Embedder { vocabs, params };

    let data: Vec<(Vec<EncodedContext>, usize)> = usable
        .iter()
        .map(|(bag, name)| {
            (
                embedder.encode(bag),
                embedder.vocabs.names.get(name).expect("name in vocab"),
            )
        })
        .collect();

    let mut adam = Adam::new(config.learning_rate, &embedder.params);
    let mut history = vec![mean_loss(&embedder.params, &data)];
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let params = &embedder.params;
            let per_example: Vec<Gradients> = batch
                .par_iter()
                .map(|&i| params.loss_and_gradients(&data[i].0, data[i].1).1)
                .collect();
            let mut total = Gradients::zeros_like(params);
            for g in &per_example {
                total.add_assign(g);
            }
            total.scale(1.0 / batch.len() as f64);
            adam.update(&mut embedder.params, &total);
        }
        let loss = mean_loss(&embedder.params, &data);
        debug!(epoch, loss, "embedder epoch");
        history.push(loss);
    }

    let correct = usable
        .iter()
        .filter(|(bag, name)| {
            embedder
                .predict_name(bag)
                .map(|i| embedder.vocabs.names.item(i) == name)
                .unwrap_or(false)
        })
        .count();
    Ok(TrainedEmbedder {
        train_accuracy: correct as f64 / usable.len() as f64,
        embedder,
        loss_history: history,
    })
}
