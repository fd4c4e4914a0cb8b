//! Linear maximum-margin classifier with Platt-scaled probabilities.
//!
//! Training minimizes `λ/2·(‖w‖² + b²) + mean(max(0, 1 − y(⟨w, x⟩ + b)))`
//! with `λ = 1/(C·n)` by stochastic subgradient steps of size `1/(λt)`; the
//! bias is handled as the weight of a constant feature. At the end of every
//! epoch both the current and the epoch-averaged iterate are scored on the
//! full objective and the best one seen so far is kept, so the recorded
//! objective history never increases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("Platt scaling did not converge in {iterations} iterations")]
    NoConvergence {
        best: PlattParams,
        iterations: usize,
    },
    #[error("invalid hyperparameters: {0}")]
    BadHyperparams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmHyperparams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl SvmHyperparams {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) || self.epochs == 0 {
            return Err(SvmError::BadHyperparams(
                "C must be positive and epochs at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SvmHyperparams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyperparams: SvmHyperparams,
    /// Best full objective after each epoch (non-increasing).
    pub objective_history: Vec<f64>,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Uncalibrated decision value `⟨w, x⟩ + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.weights.len() {
            return Err(SvmError::DimMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

/// Regularized hinge objective at `(w, b)`.
pub fn objective(weights: &[f64], bias: f64, data: &[(&[f64], bool)], lambda: f64) -> f64 {
    let hinge: f64 = data
        .iter()
        .map(|(x, y)| (1.0 - sign(*y) * (dot(weights, x) + bias)).max(0.0))
        .sum();
    0.5 * lambda * (dot(weights, weights) + bias * bias) + hinge / data.len() as f64
}

pub fn train_svm(
    train_set: &[(&[f64], bool)],
    hyper: SvmHyperparams,
) -> Result<SvmModel, SvmError> {
    if train_set.is_empty() {
        return Err(SvmError::Empty);
    }
    hyper.validate()?;
    let dim = train_set[0].0.len();
    if let Some((x, _)) = train_set.iter().find(|(x, _)| x.len() != dim) {
        return Err(SvmError::DimMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let positives = train_set.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == train_set.len() {
        return Err(SvmError::SingleClass);
    }

    let n = train_set.len();
    let lambda = 1.0 / (hyper.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (objective(&w, b, train_set, lambda), w.clone(), b);
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut t = 0u64;

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut w_sum = vec![0.0; dim];
        let mut b_sum = 0.0;
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let (x, y) = train_set[i];
            let y = sign(y);
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            b *= shrink;
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                b += eta * y;
            }
            for (s, wj) in w_sum.iter_mut().zip(&w) {
                *s += wj;
            }
            b_sum += b;
        }
        let avg_w: Vec<f64> = w_sum.iter().map(|s| s / n as f64).collect();
        let avg_b = b_sum / n as f64;
        for (cand_w, cand_b) in [(avg_w, avg_b), (w.clone(), b)] {
            let obj = objective(&cand_w, cand_b, train_set, lambda);
            if obj < best.0 {
                best = (obj, cand_w, cand_b);
            }
        }
        history.push(best.0);
    }
    Ok(SvmModel {
        weights: best.1,
        bias: best.2,
        hyperparams: hyper,
        objective_history: history,
    })
}

/// Sigmoid parameters of `P(y=1|f) = 1 / (1 + exp(A·f + B))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

impl PlattParams {
    pub fn probability(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        // Written to avoid overflow of exp for large |z|.
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

/// Negative log-likelihood of `targets` under the sigmoid at `(a, b)`.
pub fn platt_nll(scores: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(&f, &t)| {
            let z = a * f + b;
            // log(1 + e^z) computed stably.
            let softplus = if z >= 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            // −[t·log p + (1−t)·log(1−p)] with p = 1/(1+e^z)
            t * softplus + (1.0 - t) * (softplus - z)
        })
        .sum()
}

/// Platt's smoothed targets: `(N₊+1)/(N₊+2)` for positives, `1/(N₋+2)` for negatives.
pub fn platt_targets(labels: &[bool]) -> Vec<f64> {
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    labels.iter().map(|&y| if y { hi } else { lo }).collect()
}

/// Fits `(A, B)` to decision values by damped Newton iterations with
/// backtracking line search on the smoothed-target likelihood.
pub fn fit_platt_scores(scores: &[f64], labels: &[bool]) -> Result<PlattParams, SvmError> {
    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    if scores.is_empty() {
        return Err(SvmError::Empty);
    }
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(SvmError::SingleClass);
    }
    let targets = platt_targets(labels);
    let mut a = 0.0;
    let mut b = ((neg + 1.0) / (pos + 1.0)).ln();
    let mut fval = platt_nll(scores, &targets, a, b);

    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &t) in scores.iter().zip(&targets) {
            let p = PlattParams { a, b }.probability(f);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            return Ok(PlattParams { a, b });
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_nll(scores, &targets, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
            if step < MIN_STEP {
                return Err(SvmError::NoConvergence {
                    best: PlattParams { a, b },
                    iterations: MAX_ITER,
                });
            }
        }
    }
    Err(SvmError::NoConvergence {
        best: PlattParams { a, b },
        iterations: MAX_ITER,
    })
}

pub fn fit_platt(model: &SvmModel, calib_set: &[(&[f64], bool)]) -> Result<PlattParams, SvmError> {
    let scores = calib_set
        .iter()
        .map(|(x, _)| model.decision(x))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<bool> = calib_set.iter().map(|(_, y)| *y).collect();
    fit_platt_scores(&scores, &labels)
}

pub fn predict_proba(model: &SvmModel, platt: &PlattParams, x: &[f64]) -> Result<f64, SvmError> {
    Ok(platt.probability(model.decision(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_sigmoid() {
        let p = PlattParams { a: -2.0, b: 0.0 };
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((p.probability(0.5) - expected).abs() < 1e-12);
        assert!((p.probability(0.5) - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn asymptotes_and_monotonicity() {
        let p = PlattParams { a: -1.5, b: 0.3 };
        assert!(p.probability(1e6) > 1.0 - 1e-12);
        assert!(p.probability(-1e6) < 1e-12);
        assert!(p.probability(-1e6) > 0.0 || p.probability(-1e6) == 0.0);
        assert!(p.probability(0.7) > p.probability(0.2));
    }

    #[test]
    fn single_class_rejected() {
        let x = [1.0, 2.0];
        let data = [(&x[..], true), (&x[..], true)];
        assert_eq!(
            train_svm(&data, SvmHyperparams::default()),
            Err(SvmError::SingleClass)
        );
        assert_eq!(
            fit_platt_scores(&[1.0, 2.0], &[true, true]),
            Err(SvmError::SingleClass)
        );
    }

    #[test]
    fn separated_scores_orient_a_negative() {
        let scores = [-3.0, -2.0, -1.5, 1.0, 2.0, 2.5];
        let labels = [false, false, false, true, true, true];
        let p = fit_platt_scores(&scores, &labels).unwrap();
        assert!(p.a < 0.0, "{p:?}");
    }

    #[test]
    fn dim_mismatch() {
        let m = SvmModel {
            weights: vec![1.0, 2.0],
            bias: 0.0,
            hyperparams: SvmHyperparams::default(),
            objective_history: vec![],
        };
        assert!(matches!(
            m.decision(&[1.0]),
            Err(SvmError::DimMismatch { .. })
        ));
    }
}
