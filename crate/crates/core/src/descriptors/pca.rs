//! Principal component analysis fitted by SVD of the centered data matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fitted projection. Immutable after [`fit_pca`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One orthonormal row per component, ordered by explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_len(&self) -> usize {
        self.mean.len()
    }

    /// `components * (raw - mean)`.
    pub fn project(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.mean.len() {
            return Err(Error::Shape {
                expected: self.mean.len(),
                got: raw.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(raw.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect())
    }

    /// Maps a reduced vector back to the raw space.
    pub fn reconstruct(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.components.len() {
            return Err(Error::Shape {
                expected: self.components.len(),
                got: reduced.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, &r) in self.components.iter().zip(reduced) {
            out.iter_mut().zip(c).for_each(|(o, w)| *o += r * w);
        }
        Ok(out)
    }
}

/// Fits a PCA keeping `min(n_components, samples - 1, dim)` components.
///
/// Each component's sign is fixed so that its largest-magnitude entry is
/// non-negative, which makes the fit reproducible.
pub fn fit_pca(samples: &[Vec<f64>], n_components: usize) -> Result<PcaModel> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    if n_components == 0 {
        return Err(Error::Config("n_components must be positive".into()));
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            got: bad.len(),
        });
    }
    if dim == 0 {
        return Err(Error::DegenerateInput("zero-length vectors".into()));
    }

    let n = samples.len();
    let mut mean = vec![0.0; dim];
    for s in samples {
        mean.iter_mut().zip(s).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, dim, |r, c| samples[r][c] - mean[c]);
    // With fewer samples than dimensions, factor Xᵀ = QR first and take the
    // SVD of the small n×n factor: X = Rᵀ Qᵀ = U S (Q W)ᵀ.
    let (svd, v_t) = if n < dim {
        let (q, r) = centered.transpose().qr().unpack();
        let svd = r.transpose().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested right singular vectors") * q.transpose();
        (svd, v_t)
    } else {
        let mut svd = centered.svd(false, true);
        let v_t = svd.v_t.take().expect("requested right singular vectors");
        (svd, v_t)
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let keep = n_components.min(n - 1).min(dim);
    let mut components = Vec::with_capacity(keep);
    let mut explained_variance = Vec::with_capacity(keep);
    for &k in order.iter().take(keep) {
        let mut row: Vec<f64> = v_t.row(k).iter().copied().collect();
        let pivot = row
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1.abs() {
                    (i, v)
                } else {
                    best
                }
            });
        if pivot.1 < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(row);
        let s = svd.singular_values[k];
        explained_variance.push(s * s / (n - 1) as f64);
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn line_direction_from_covariance() {
        // Points on y = 2x: the covariance is proportional to [[1, 2], [2, 4]],
        // whose leading eigenvector is (1, 2)/sqrt(5).
        let pts: Vec<Vec<f64>> = (-5..=5).map(|t| vec![t as f64, 2.0 * t as f64]).collect();
        let model = fit_pca(&pts, 2).unwrap();
        let expected = [1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()];
        let c = &model.components[0];
        assert!((c[0] - expected[0]).abs() < 1e-9 && (c[1] - expected[1]).abs() < 1e-9);
        // Variance of 2t over t = -5..5 is 5 * 11 * 2 / 10; total along the line is 5x that of t.
        assert!((model.explained_variance[0] - 55.0).abs() < 1e-9);
        assert!(model.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn identical_vectors_project_to_zero() {
        let pts = vec![vec![3.0, -1.0, 2.0]; 6];
        let model = fit_pca(&pts, 10).unwrap();
        assert_eq!(model.n_components(), 3);
        for p in &pts {
            assert!(model.project(p).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn component_count_is_capped() {
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..20).map(|j| ((i * 31 + j * 17) % 11) as f64).collect())
            .collect();
        assert_eq!(fit_pca(&pts, 100).unwrap().n_components(), 4);
        assert_eq!(fit_pca(&pts, 2).unwrap().n_components(), 2);
    }

    #[test]
    fn orthonormal_rows() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|i| (0..7).map(|j| ((i * i + 3 * j) % 13) as f64 * 0.5).collect())
            .collect();
        let model = fit_pca(&pts, 6).unwrap();
        for (i, a) in model.components.iter().enumerate() {
            for (j, b) in model.components.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_pca(&[vec![1.0]], 1),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
        assert!(matches!(
            fit_pca(&[vec![1.0], vec![1.0, 2.0]], 1),
            Err(Error::Shape { .. })
        ));
        let model = fit_pca(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        assert!(matches!(model.project(&[1.0]), Err(Error::Shape { expected: 2, got: 1 })));
    }

    #[test]
    fn mean_projects_to_origin() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64, 1.0]).collect();
        let model = fit_pca(&pts, 3).unwrap();
        let p = model.project(&model.mean).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-12));
    }
}
