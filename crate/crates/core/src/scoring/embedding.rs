use super::ScoringError;
use crate::backend::LayerEmbeddings;
use crate::stats::linalg::{Cholesky, Matrix};
use crate::stats::{pairwise_sum, population_variance};

/// Diagonal loading added to the sample covariance: ε·I with
/// ε = max(scale · trace / dim, floor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shrinkage {
    pub scale: f64,
    pub floor: f64,
}

impl Default for Shrinkage {
    fn default() -> Self {
        Self { scale: 1e-3, floor: 1e-8 }
    }
}

/// Mean and (n − 1)-normalized covariance of a set of equal-length vectors.
pub fn sample_covariance<V: AsRef<[f64]>>(vectors: &[V]) -> Result<(Vec<f64>, Matrix), ScoringError> {
    if vectors.len() < 2 {
        return Err(ScoringError::TooFewVectors(vectors.len()));
    }
    let dim = vectors[0].as_ref().len();
    if dim == 0 {
        return Err(ScoringError::DimMismatch { expected: 1, got: 0 });
    }
    if let Some(v) = vectors.iter().find(|v| v.as_ref().len() != dim) {
        return Err(ScoringError::DimMismatch { expected: dim, got: v.as_ref().len() });
    }
    let n = vectors.len();
    let mut col = vec![0.0; n];
    let mut mean = vec![0.0; dim];
    for (j, m) in mean.iter_mut().enumerate() {
        for (c, v) in col.iter_mut().zip(vectors) {
            *c = v.as_ref()[j];
        }
        *m = pairwise_sum(&col) / n as f64;
    }
    let centered: Vec<Vec<f64>> =
        vectors.iter().map(|v| v.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let mut cov = Matrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            for (c, v) in col.iter_mut().zip(&centered) {
                *c = v[a] * v[b];
            }
            let s = pairwise_sum(&col) / (n - 1) as f64;
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    Ok((mean, cov))
}

/// Gaussian fitted to a set of embeddings, with its covariance factored once.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct GaussianFit {
    pub mean: Vec<f64>,
    /// Covariance after shrinkage.
    pub covariance: Matrix,
    pub dim: usize,
    pub n_fit: usize,
    pub epsilon: f64,
    chol: Cholesky,
}

impl GaussianFit {
    /// Builds a fit from known parameters (no shrinkage applied).
    pub fn from_parameters(mean: Vec<f64>, covariance: Matrix) -> Result<Self, ScoringError> {
        let dim = mean.len();
        if covariance.rows() != dim || covariance.cols() != dim {
            return Err(ScoringError::DimMismatch { expected: dim, got: covariance.rows() });
        }
        let chol = Cholesky::new(&covariance).ok_or(ScoringError::NotPositiveDefinite)?;
        Ok(Self { mean, covariance, dim, n_fit: 0, epsilon: 0.0, chol })
    }
}

pub fn fit_gaussian<V: AsRef<[f64]>>(vectors: &[V], shrinkage: Shrinkage) -> Result<GaussianFit, ScoringError> {
    let (mean, mut cov) = sample_covariance(vectors)?;
    let dim = mean.len();
    let trace: f64 = (0..dim).map(|i| cov[(i, i)]).sum();
    let epsilon = (shrinkage.scale * trace / dim as f64).max(shrinkage.floor);
    for i in 0..dim {
        cov[(i, i)] += epsilon;
    }
    // Covariance plus a positive multiple of I is positive definite, so a
    // failure here means the inputs held non-finite values.
    let chol = Cholesky::new(&cov).ok_or(ScoringError::NotPositiveDefinite)?;
    Ok(GaussianFit { mean, covariance: cov, dim, n_fit: vectors.len(), epsilon, chol })
}

/// Squared Mahalanobis distance (z − μ)ᵀ Σ⁻¹ (z − μ).
pub fn mahalanobis(fit: &GaussianFit, z: &[f64]) -> Result<f64, ScoringError> {
    if z.len() != fit.dim {
        return Err(ScoringError::DimMismatch { expected: fit.dim, got: z.len() });
    }
    let d: Vec<f64> = z.iter().zip(&fit.mean).map(|(a, m)| a - m).collect();
    Ok(fit.chol.quadratic_form_inverse(&d))
}

/// MD to the in-distribution fit minus MD to the background fit.
pub fn relative_mahalanobis(fit_in: &GaussianFit, fit_bg: &GaussianFit, z: &[f64]) -> Result<f64, ScoringError> {
    if fit_in.dim != fit_bg.dim {
        return Err(ScoringError::DimMismatch { expected: fit_in.dim, got: fit_bg.dim });
    }
    Ok(mahalanobis(fit_in, z)? - mahalanobis(fit_bg, z)?)
}

/// Trajectory volatility stand-in: each layer row is scaled to unit norm,
/// and the result is the population variance of the distances between
/// adjacent rows.
pub fn trajectory_volatility(emb: &LayerEmbeddings) -> Result<f64, ScoringError> {
    if emb.layers < 2 {
        return Err(ScoringError::TooFewLayers(emb.layers));
    }
    let rows: Vec<Vec<f64>> = (0..emb.layers)
        .map(|l| {
            let r: Vec<f64> = emb.row(l).iter().map(|&v| f64::from(v)).collect();
            let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
            let norm = pairwise_sum(&sq).sqrt();
            if !(norm > 0.0) {
                return Err(ScoringError::ZeroNormRow { layer: l });
            }
            Ok(r.into_iter().map(|v| v / norm).collect())
        })
        .collect::<Result<_, _>>()?;
    let dists: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            let sq: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| (b - a) * (b - a)).collect();
            pairwise_sum(&sq).sqrt()
        })
        .collect();
    Ok(population_variance(&dists))
}
