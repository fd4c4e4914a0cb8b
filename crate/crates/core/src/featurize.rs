//! Class embeddings, method‖class pair vectors and PCA reduction.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::CodeVector;
use crate::frontend::{ClassDecl, ClassId, MethodId};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FeatureError {
    #[error("class {0} has no embeddable methods")]
    NoMethods(ClassId),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("PCA needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("covariance is all zero")]
    DegenerateData,
    #[error("invalid PCA policy: {0}")]
    BadPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub method_id: MethodId,
    pub class_id: ClassId,
    pub stage: Stage,
}

/// Element-wise mean of the vectors of `class`'s methods, skipping `exclude`
/// and methods without a vector.
pub fn class_embedding(
    class: &ClassDecl,
    method_vectors: &HashMap<MethodId, CodeVector>,
    exclude: Option<&MethodId>,
) -> Result<CodeVector, FeatureError> {
    let mut sum: Option<Vec<f64>> = None;
    let mut k = 0usize;
    for m in &class.methods {
        if Some(&m.id) == exclude {
            continue;
        }
        let Some(v) = method_vectors.get(&m.id) else {
            continue;
        };
        match &mut sum {
            None => sum = Some(v.values.clone()),
            Some(s) => {
                if s.len() != v.values.len() {
                    return Err(FeatureError::DimMismatch {
                        expected: s.len(),
                        got: v.values.len(),
                    });
                }
                for (a, b) in s.iter_mut().zip(&v.values) {
                    *a += b;
                }
            }
        }
        k += 1;
    }
    let mut values = sum.ok_or_else(|| FeatureError::NoMethods(class.id.clone()))?;
    let scale = 1.0 / k as f64;
    for v in &mut values {
        *v *= scale;
    }
    Ok(CodeVector {
        values,
        source: class.id.0.clone(),
    })
}

/// `[method ‖ class]`, method half first.
pub fn make_pair_vector(
    method_vec: &CodeVector,
    class_vec: &CodeVector,
    method_id: MethodId,
    class_id: ClassId,
) -> Result<FeatureVector, FeatureError> {
    if method_vec.len() != class_vec.len() {
        return Err(FeatureError::DimMismatch {
            expected: method_vec.len(),
            got: class_vec.len(),
        });
    }
    let mut values = Vec::with_capacity(2 * method_vec.len());
    values.extend_from_slice(&method_vec.values);
    values.extend_from_slice(&class_vec.values);
    Ok(FeatureVector {
        values,
        method_id,
        class_id,
        stage: Stage::Raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaPolicy {
    /// Smallest k whose cumulative explained variance reaches the threshold.
    Variance(f64),
    Fixed(usize),
}

impl Default for PcaPolicy {
    fn default() -> Self {
        PcaPolicy::Variance(0.95)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k rows of length `mean.len()`, orthonormal.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// `components · (x − mean)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if x.len() != self.mean.len() {
            return Err(FeatureError::DimMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((c, v), m)| c * (v - m))
                    .sum()
            })
            .collect())
    }

    /// `mean + componentsᵀ · z`.
    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (row, &zi) in self.components.iter().zip(z) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += zi * c;
            }
        }
        out
    }

    /// Keeps only the leading `k` components.
    pub fn truncated(&self, k: usize) -> PcaModel {
        PcaModel {
            mean: self.mean.clone(),
            components: self.components[..k.min(self.k())].to_vec(),
            explained_variance_ratio: self.explained_variance_ratio[..k.min(self.k())].to_vec(),
        }
    }
}

/// Fits PCA by eigendecomposition of the sample covariance.
///
/// Each component is sign-normalized so that its largest-magnitude entry is
/// positive.
pub fn fit_pca(raw_vectors: &[&[f64]], policy: PcaPolicy) -> Result<PcaModel, FeatureError> {
    let n = raw_vectors.len();
    if n < 2 {
        return Err(FeatureError::TooFewSamples(n));
    }
    let dim = raw_vectors[0].len();
    if let Some(bad) = raw_vectors.iter().find(|v| v.len() != dim) {
        return Err(FeatureError::DimMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let mut mean = vec![0.0; dim];
    for v in raw_vectors {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| raw_vectors[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(FeatureError::DegenerateData);
    }
    let ratios: Vec<f64> = eigenvalues.iter().map(|v| v / total).collect();

    let k = match policy {
        PcaPolicy::Fixed(k) => {
            if k == 0 || k > dim {
                return Err(FeatureError::BadPolicy(format!(
                    "k must be in 1..={dim}, got {k}"
                )));
            }
            k
        }
        PcaPolicy::Variance(t) => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(FeatureError::BadPolicy(format!(
                    "variance threshold must be in (0, 1], got {t}"
                )));
            }
            let mut acc = 0.0;
            let mut k = dim;
            for (i, r) in ratios.iter().enumerate() {
                acc += r;
                if acc >= t - 1e-12 {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };

    let components = order[..k]
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot =
                row.iter().copied().fold(
                    0.0f64,
                    |best, v| if v.abs() > best.abs() { v } else { best },
                );
            if pivot < 0.0 {
                for v in &mut row {
                    *v = -*v;
                }
            }
            row
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio: ratios[..k].to_vec(),
    })
}

pub fn apply_pca(model: &PcaModel, raw: &FeatureVector) -> Result<FeatureVector, FeatureError> {
    Ok(FeatureVector {
        values: model.project(&raw.values)?,
        method_id: raw.method_id.clone(),
        class_id: raw.class_id.clone(),
        stage: Stage::Reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_unit;

    fn cv(values: Vec<f64>) -> CodeVector {
        CodeVector {
            values,
            source: String::new(),
        }
    }

    #[test]
    fn mean_of_one_and_two() {
        let u = parse_unit(
            "class A { int f(int a) { return a + 1; } int g(int b) { return b + 2; } }",
            "p/A.java",
        )
        .unwrap();
        let class = &u.classes[0];
        let (f, g) = (class.methods[0].id.clone(), class.methods[1].id.clone());
        let mut vecs = HashMap::new();
        vecs.insert(f.clone(), cv(vec![1.0, 2.0, 3.0]));
        let one = class_embedding(class, &vecs, None).unwrap();
        assert_eq!(one.values, vec![1.0, 2.0, 3.0]);

        vecs.insert(g.clone(), cv(vec![3.0, -2.0, 0.5]));
        let two = class_embedding(class, &vecs, None).unwrap();
        assert_eq!(two.values, vec![2.0, 0.0, 1.75]);

        let excl = class_embedding(class, &vecs, Some(&g)).unwrap();
        assert_eq!(excl.values, vec![1.0, 2.0, 3.0]);

        vecs.remove(&f);
        assert_eq!(
            class_embedding(class, &vecs, Some(&g)),
            Err(FeatureError::NoMethods(class.id.clone()))
        );
    }

    #[test]
    fn pair_vector_layout() {
        let m = MethodId("p/A.java#A.f/1".into());
        let c = ClassId("p/B.java#B".into());
        let pv = make_pair_vector(
            &cv(vec![1.0, 2.0]),
            &cv(vec![3.0, 4.0]),
            m.clone(),
            c.clone(),
        )
        .unwrap();
        assert_eq!(pv.values, vec![1.0, 2.0, 3.0, 4.0]);
        let swapped = make_pair_vector(
            &cv(vec![3.0, 4.0]),
            &cv(vec![1.0, 2.0]),
            m.clone(),
            c.clone(),
        )
        .unwrap();
        assert_ne!(pv.values, swapped.values);
        let zero = make_pair_vector(
            &cv(vec![0.0; 384]),
            &cv(vec![0.0; 384]),
            m.clone(),
            c.clone(),
        )
        .unwrap();
        assert_eq!(zero.values, vec![0.0; 768]);
        assert!(matches!(
            make_pair_vector(&cv(vec![1.0]), &cv(vec![1.0, 2.0]), m, c),
            Err(FeatureError::DimMismatch { .. })
        ));
    }

    #[test]
    fn plane_data_needs_two_components() {
        // Points on the plane z = x + 2y.
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = (i as f64 * 0.37).sin() * 3.0;
                let y = (i as f64 * 1.13).cos();
                vec![x, y, x + 2.0 * y]
            })
            .collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let model = fit_pca(&refs, PcaPolicy::Variance(0.999)).unwrap();
        assert_eq!(model.k(), 2);
        let full = fit_pca(&refs, PcaPolicy::Fixed(3)).unwrap();
        assert!(full.explained_variance_ratio[2] < 1e-12);
    }

    #[test]
    fn projection_basics() {
        let pts = [
            vec![1.0, 0.0],
            vec![-1.0, 0.2],
            vec![0.5, -0.3],
            vec![2.0, 1.0],
        ];
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let model = fit_pca(&refs, PcaPolicy::Fixed(2)).unwrap();
        assert!(model
            .project(&model.mean)
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-15));
        let on_axis: Vec<f64> = model.components[0]
            .iter()
            .zip(&model.mean)
            .map(|(c, m)| c + m)
            .collect();
        let z = model.project(&on_axis).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12);
        for row in &model.components {
            let pivot = row
                .iter()
                .copied()
                .fold(0.0f64, |b, v| if v.abs() > b.abs() { v } else { b });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn degenerate_and_bad_inputs() {
        let same = [vec![1.0, 1.0], vec![1.0, 1.0]];
        let refs: Vec<&[f64]> = same.iter().map(Vec::as_slice).collect();
        assert_eq!(
            fit_pca(&refs, PcaPolicy::default()),
            Err(FeatureError::DegenerateData)
        );
        assert_eq!(
            fit_pca(&refs[..1], PcaPolicy::default()),
            Err(FeatureError::TooFewSamples(1))
        );
    }
}
