use mmrec::svm::{
    fit_platt, fit_platt_scores, objective, platt_nll, predict_proba, train_svm, PlattParams,
    SvmError, SvmHyperparams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Positives near (2,2), negatives near (−2,−2); linearly separable.
fn blobs(n: usize, seed: u64) -> Vec<(Vec<f64>, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let y = i % 2 == 0;
            let c = if y { 2.0 } else { -2.0 };
            (
                vec![
                    c + rng.random_range(-0.8..0.8),
                    c + rng.random_range(-0.8..0.8),
                ],
                y,
            )
        })
        .collect()
}

fn refs(d: &[(Vec<f64>, bool)]) -> Vec<(&[f64], bool)> {
    d.iter().map(|(x, y)| (x.as_slice(), *y)).collect()
}

#[test]
fn separable_blobs_are_fit_exactly() {
    let data = blobs(80, 1);
    let model = train_svm(&refs(&data), SvmHyperparams::default()).unwrap();
    for (x, y) in &data {
        let f = model.decision(x).unwrap();
        assert_eq!(f > 0.0, *y);
        let margin = if *y { f } else { -f };
        assert!(margin >= 0.0);
    }
    assert!(model.objective_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn flipping_labels_negates_the_model() {
    let data = blobs(40, 2);
    let flipped: Vec<(Vec<f64>, bool)> = data.iter().map(|(x, y)| (x.clone(), !y)).collect();
    let a = train_svm(&refs(&data), SvmHyperparams::default()).unwrap();
    let b = train_svm(&refs(&flipped), SvmHyperparams::default()).unwrap();
    for (u, v) in a.weights.iter().zip(&b.weights) {
        assert!((u + v).abs() < 1e-12);
    }
    assert!((a.bias + b.bias).abs() < 1e-12);
    for (x, _) in &data {
        assert_eq!(a.decision(x).unwrap() > 0.0, b.decision(x).unwrap() < 0.0);
    }
}

#[test]
fn objective_is_near_a_grid_search_minimum() {
    let data: Vec<(Vec<f64>, bool)> = vec![
        (vec![1.0, 2.0], true),
        (vec![2.0, 1.0], true),
        (vec![0.5, 0.5], true),
        (vec![-1.0, -0.5], false),
        (vec![0.0, -1.5], false),
        (vec![0.3, 0.1], false),
    ];
    let set = refs(&data);
    let hyper = SvmHyperparams {
        c: 1.0,
        epochs: 400,
        seed: 7,
    };
    let model = train_svm(&set, hyper).unwrap();
    let lambda = 1.0 / (hyper.c * data.len() as f64);
    let got = objective(&model.weights, model.bias, &set, lambda);

    let grid: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.05).collect();
    let mut best = f64::INFINITY;
    for &w1 in &grid {
        for &w2 in &grid {
            for &b in &grid {
                best = best.min(objective(&[w1, w2], b, &set, lambda));
            }
        }
    }
    assert!(got <= best * 1.02, "svm {got} grid {best}");
}

#[test]
fn training_is_bit_reproducible() {
    let data = blobs(50, 3);
    let a = train_svm(&refs(&data), SvmHyperparams::default()).unwrap();
    let b = train_svm(&refs(&data), SvmHyperparams::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.weights.iter().all(|w| w.is_finite()));
}

#[test]
fn svm_error_cases() {
    let one_class = vec![(vec![1.0], true), (vec![2.0], true)];
    assert!(matches!(
        train_svm(&refs(&one_class), SvmHyperparams::default()),
        Err(SvmError::SingleClass)
    ));
    assert!(matches!(
        train_svm(&[], SvmHyperparams::default()),
        Err(SvmError::Empty)
    ));
    let model = train_svm(&refs(&blobs(10, 4)), SvmHyperparams::default()).unwrap();
    assert!(matches!(
        model.decision(&[1.0]),
        Err(SvmError::DimMismatch { .. })
    ));
    let bad = SvmHyperparams {
        c: 0.0,
        ..SvmHyperparams::default()
    };
    assert!(matches!(
        train_svm(&refs(&blobs(10, 4)), bad),
        Err(SvmError::BadHyperparams(_))
    ));
}

#[test]
fn hand_computed_sigmoid() {
    let p = PlattParams { a: -2.0, b: 0.0 };
    let want = 1.0 / (1.0 + (-1.0f64).exp());
    assert!((p.probability(0.5) - want).abs() < 1e-9);
    assert!((p.probability(0.5) - 0.7311).abs() < 1e-4);
}

#[test]
fn separated_scores_give_negative_slope() {
    let scores = [-3.0, -2.5, -2.0, -1.0, 1.0, 2.0, 2.5, 3.0];
    let labels = [false, false, false, false, true, true, true, true];
    let p = fit_platt_scores(&scores, &labels).unwrap();
    assert!(p.a < 0.0);
    assert!(p.probability(1e6) > 1.0 - 1e-9);
}

#[test]
fn symmetric_scores_are_even_odds_at_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..200 {
        let f: f64 = rng.random_range(0.0..3.0);
        let y = rng.random_bool(0.5 + f / 7.0);
        scores.extend([f, -f]);
        labels.extend([y, !y]);
    }
    let p = fit_platt_scores(&scores, &labels).unwrap();
    assert!((p.probability(0.0) - 0.5).abs() < 0.05);
}

fn raw_nll(probs: &[f64], labels: &[bool]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(p, y)| if *y { -p.ln() } else { -(1.0 - p).ln() })
        .sum()
}

#[test]
fn fitted_sigmoid_beats_the_base_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let train = blobs(60, 7);
    let model = train_svm(&refs(&train), SvmHyperparams::default()).unwrap();
    // Overlapping calibration data so the fit is not degenerate.
    let calib: Vec<(Vec<f64>, bool)> = (0..200)
        .map(|_| {
            let y = rng.random_bool(0.4);
            let c = if y { 0.7 } else { -0.7 };
            (
                vec![
                    c + rng.random_range(-1.5..1.5),
                    c + rng.random_range(-1.5..1.5),
                ],
                y,
            )
        })
        .collect();
    let platt = fit_platt(&model, &refs(&calib)).unwrap();
    let labels: Vec<bool> = calib.iter().map(|(_, y)| *y).collect();
    let probs: Vec<f64> = calib
        .iter()
        .map(|(x, _)| predict_proba(&model, &platt, x).unwrap())
        .collect();
    let rate = labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64;
    let fitted = raw_nll(&probs, &labels);
    let constant = raw_nll(&vec![rate; labels.len()], &labels);
    assert!(fitted <= constant, "{fitted} > {constant}");

    let scores: Vec<f64> = calib
        .iter()
        .map(|(x, _)| model.decision(x).unwrap())
        .collect();
    let targets: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    assert!(
        (platt_nll(&scores, &targets, platt.a, platt.b) - fitted).abs() < 1e-9 * fitted.max(1.0)
    );
}

#[test]
fn platt_requires_both_labels() {
    assert!(matches!(
        fit_platt_scores(&[1.0, 2.0], &[true, true]),
        Err(SvmError::SingleClass)
    ));
    assert!(matches!(fit_platt_scores(&[], &[]), Err(SvmError::Empty)));
}

proptest! {
    #[test]
    fn probabilities_are_open_unit_and_strictly_monotone(a in -10.0f64..-0.01, b in -5.0f64..5.0, f in -3.0f64..3.0, df in 0.001f64..2.0) {
        let p = PlattParams { a, b };
        let (lo, hi) = (p.probability(f), p.probability(f + df));
        prop_assert!(lo > 0.0 && lo < 1.0);
        prop_assert!(hi > lo);
    }
}
