//! Attention-pooled bag encoder and its analytic gradients.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub token: usize,
    pub path: usize,
    pub code: usize,
}

impl Dims {
    pub fn context_width(&self) -> usize {
        2 * self.token + self.path
    }
}

/// Learned state of the encoder.
///
/// `fc_weight` is stored as `code × (2·token + path)` so that the combined
/// context vector is `tanh(fc_weight · c + fc_bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderParams {
    pub dims: Dims,
    pub token_matrix: Array2<f64>,
    pub path_matrix: Array2<f64>,
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
    pub attention: Array1<f64>,
    /// `code × names`; used only by the name-prediction objective.
    pub output: Array2<f64>,
}

/// One encoded path-context: (start token, path, end token) row indices.
pub type EncodedContext = (usize, usize, usize);

fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl EmbedderParams {
    /// Uniform initialization in `±1/sqrt(fan_in)`.
    pub fn init(
        dims: Dims,
        n_tokens: usize,
        n_paths: usize,
        n_names: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let width = dims.context_width();
        let token_matrix = uniform(n_tokens, dims.token, 1.0 / (dims.token as f64).sqrt(), rng);
        let path_matrix = uniform(n_paths, dims.path, 1.0 / (dims.path as f64).sqrt(), rng);
        let fc_bound = 1.0 / (width as f64).sqrt();
        let fc_weight = uniform(dims.code, width, fc_bound, rng);
        let fc_bias = Array1::from_shape_fn(dims.code, |_| rng.random_range(-fc_bound..fc_bound));
        let code_bound = 1.0 / (dims.code as f64).sqrt();
        let attention =
            Array1::from_shape_fn(dims.code, |_| rng.random_range(-code_bound..code_bound));
        let output = uniform(dims.code, n_names, code_bound, rng);
        Self {
            dims,
            token_matrix,
            path_matrix,
            fc_weight,
            fc_bias,
            attention,
            output,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.groups()
            .iter()
            .all(|(_, g)| g.iter().all(|v| v.is_finite()))
    }

    /// Parameter groups as flat slices, in a fixed order shared with [`Gradients::groups`].
    pub fn groups(&self) -> [(&'static str, &[f64]); 6] {
        [
            (
                "token_matrix",
                self.token_matrix.as_slice().expect("standard layout"),
            ),
            (
                "path_matrix",
                self.path_matrix.as_slice().expect("standard layout"),
            ),
            (
                "fc_weight",
                self.fc_weight.as_slice().expect("standard layout"),
            ),
            ("fc_bias", self.fc_bias.as_slice().expect("standard layout")),
            (
                "attention",
                self.attention.as_slice().expect("standard layout"),
            ),
            ("output", self.output.as_slice().expect("standard layout")),
        ]
    }

    pub fn groups_mut(&mut self) -> [(&'static str, &mut [f64]); 6] {
        [
            (
                "token_matrix",
                self.token_matrix.as_slice_mut().expect("standard layout"),
            ),
            (
                "path_matrix",
                self.path_matrix.as_slice_mut().expect("standard layout"),
            ),
            (
                "fc_weight",
                self.fc_weight.as_slice_mut().expect("standard layout"),
            ),
            (
                "fc_bias",
                self.fc_bias.as_slice_mut().expect("standard layout"),
            ),
            (
                "attention",
                self.attention.as_slice_mut().expect("standard layout"),
            ),
            (
                "output",
                self.output.as_slice_mut().expect("standard layout"),
            ),
        ]
    }

    fn context_inputs(&self, contexts: &[EncodedContext]) -> Array2<f64> {
        let t = self.dims.token;
        let p = self.dims.path;
        let mut inputs = Array2::zeros((contexts.len(), self.dims.context_width()));
        for (i, &(s, path, e)) in contexts.iter().enumerate() {
            let mut row = inputs.row_mut(i);
            row.slice_mut(s![..t]).assign(&self.token_matrix.row(s));
            row.slice_mut(s![t..t + p])
                .assign(&self.path_matrix.row(path));
            row.slice_mut(s![t + p..]).assign(&self.token_matrix.row(e));
        }
        inputs
    }

    /// Encodes a non-empty bag.
    pub fn forward(&self, contexts: &[EncodedContext]) -> Forward {
        assert!(!contexts.is_empty(), "forward on an empty bag");
        let inputs = self.context_inputs(contexts);
        let mut hidden = inputs.dot(&self.fc_weight.t());
        hidden += &self.fc_bias;
        hidden.mapv_inplace(f64::tanh);
        let scores = hidden.dot(&self.attention);
        let weights = softmax(scores.view());
        let code = weights.dot(&hidden);
        Forward {
            inputs,
            hidden,
            weights,
            code,
        }
    }

    pub fn logits(&self, code: &Array1<f64>) -> Array1<f64> {
        code.dot(&self.output)
    }

    /// Cross-entropy of the name prediction for one bag.
    pub fn loss(&self, contexts: &[EncodedContext], target: usize) -> f64 {
        let fwd = self.forward(contexts);
        let logits = self.logits(&fwd.code);
        log_sum_exp(logits.view()) - logits[target]
    }

    /// Loss and gradient of every parameter for one bag.
    pub fn loss_and_gradients(
        &self,
        contexts: &[EncodedContext],
        target: usize,
    ) -> (f64, Gradients) {
        let fwd = self.forward(contexts);
        let logits = self.logits(&fwd.code);
        let loss = log_sum_exp(logits.view()) - logits[target];

        let mut d_logits = softmax(logits.view());
        d_logits[target] -= 1.0;
        // logits = outputᵀ · code
        let d_output = outer(&fwd.code, &d_logits);
        let d_code = self.output.dot(&d_logits);

        // code = Σ α_i h_i
        let mut d_hidden = outer(&fwd.weights, &d_code);
        let d_alpha = fwd.hidden.dot(&d_code);
        // α = softmax(s): ds_i = α_i (dα_i − Σ_j α_j dα_j)
        let mean = fwd.weights.dot(&d_alpha);
        let d_scores = &fwd.weights * &(&d_alpha - mean);
        // s_i = ⟨attention, h_i⟩
        let d_attention = fwd.hidden.t().dot(&d_scores);
        for (mut row, &ds) in d_hidden.axis_iter_mut(Axis(0)).zip(d_scores.iter()) {
            row.scaled_add(ds, &self.attention);
        }
        // h = tanh(z)
        let d_z = &d_hidden * &fwd.hidden.mapv(|h| 1.0 - h * h);
        let d_fc_weight = d_z.t().dot(&fwd.inputs).as_standard_layout().into_owned();
        let d_fc_bias = d_z.sum_axis(Axis(0));
        let d_inputs = d_z.dot(&self.fc_weight);

        let t = self.dims.token;
        let p = self.dims.path;
        let mut d_token = Array2::zeros(self.token_matrix.raw_dim());
        let mut d_path = Array2::zeros(self.path_matrix.raw_dim());
        for (row, &(s, path, e)) in d_inputs.axis_iter(Axis(0)).zip(contexts) {
            d_token.row_mut(s).scaled_add(1.0, &row.slice(s![..t]));
            d_path
                .row_mut(path)
                .scaled_add(1.0, &row.slice(s![t..t + p]));
            d_token.row_mut(e).scaled_add(1.0, &row.slice(s![t + p..]));
        }
        (
            loss,
            Gradients {
                token_matrix: d_token,
                path_matrix: d_path,
                fc_weight: d_fc_weight,
                fc_bias: d_fc_bias,
                attention: d_attention,
                output: d_output,
            },
        )
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Combined context vectors before the dense layer, one row per context.
    pub inputs: Array2<f64>,
    /// `tanh(fc_weight · c + fc_bias)`, one row per context.
    pub hidden: Array2<f64>,
    /// Attention weights; non-negative, summing to one.
    pub weights: Array1<f64>,
    pub code: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub token_matrix: Array2<f64>,
    pub path_matrix: Array2<f64>,
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
    pub attention: Array1<f64>,
    pub output: Array2<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &EmbedderParams) -> Self {
        Self {
            token_matrix: Array2::zeros(p.token_matrix.raw_dim()),
            path_matrix: Array2::zeros(p.path_matrix.raw_dim()),
            fc_weight: Array2::zeros(p.fc_weight.raw_dim()),
            fc_bias: Array1::zeros(p.fc_bias.raw_dim()),
            attention: Array1::zeros(p.attention.raw_dim()),
            output: Array2::zeros(p.output.raw_dim()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.token_matrix += &other.token_matrix;
        self.path_matrix += &other.path_matrix;
        self.fc_weight += &other.fc_weight;
        self.fc_bias += &other.fc_bias;
        self.attention += &other.attention;
        self.output += &other.output;
    }

    pub fn scale(&mut self, k: f64) {
        self.token_matrix *= k;
        self.path_matrix *= k;
        self.fc_weight *= k;
        self.fc_bias *= k;
        self.attention *= k;
        self.output *= k;
    }

    pub fn groups(&self) -> [(&'static str, &[f64]); 6] {
        [
            (
                "token_matrix",
                self.token_matrix.as_slice().expect("standard layout"),
            ),
            (
                "path_matrix",
                self.path_matrix.as_slice().expect("standard layout"),
            ),
            (
                "fc_weight",
                self.fc_weight.as_slice().expect("standard layout"),
            ),
            ("fc_bias", self.fc_bias.as_slice().expect("standard layout")),
            (
                "attention",
                self.attention.as_slice().expect("standard layout"),
            ),
            ("output", self.output.as_slice().expect("standard layout")),
        ]
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let a2 = a.view().insert_axis(Axis(1));
    let b2 = b.view().insert_axis(Axis(0));
    a2.dot(&b2).as_standard_layout().into_owned()
}

pub fn softmax(x: ArrayView1<f64>) -> Array1<f64> {
    let max = x.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut e = x.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e /= sum;
    e
}

pub fn log_sum_exp(x: ArrayView1<f64>) -> f64 {
    let max = x.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + x.mapv(|v| (v - max).exp()).sum().ln()
}
