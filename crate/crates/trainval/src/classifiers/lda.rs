//! Two-class LDA with shared, shrinkage-regularized negative statistics.
//!
//! The covariance and negative mean are estimated once from the negatives
//! and reused by every exemplar model, so training an exemplar costs one
//! triangular solve instead of a refit.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{canonical_refs, note_training_call, ClassifierConfig, LinearModel};
use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};

/// Mean and regularized covariance of the negative class.
#[derive(Debug, Clone)]
pub struct NegativeStatistics {
    mean: DVector<f64>,
    cov_reg: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    count: usize,
    lambda: f64,
}

impl NegativeStatistics {
    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn regularized_covariance(&self) -> &DMatrix<f64> {
        &self.cov_reg
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

/// Fits `μ−` and `Σ_reg = Σ + λI` from the negatives of `d` with the
/// absolute shrinkage `lambda > 0`. The sample covariance divides by
/// `count − 1`, so at least two negatives are required.
pub fn fit_negative_statistics(d: &Dataset, lambda: f64) -> Result<NegativeStatistics> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange {
            what: "shrinkage lambda",
            range: "(0, inf)",
            got: lambda,
        });
    }
    let (mean, cov) = negative_moments(d)?;
    regularize(mean, cov, d.n_negatives(), lambda)
}

/// Fits statistics with the config's relative shrinkage rule:
/// `λ = shrinkage · trace(Σ)/D`, falling back to `shrinkage` itself when the
/// sample covariance is zero.
pub(crate) fn fit_negative_statistics_for(
    d: &Dataset,
    cfg: &ClassifierConfig,
) -> Result<NegativeStatistics> {
    let (mean, cov) = negative_moments(d)?;
    let trace: f64 = cov.diagonal().iter().sum();
    let lambda = if trace > 0.0 {
        cfg.shrinkage * trace / d.dim() as f64
    } else {
        cfg.shrinkage
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange {
            what: "shrinkage lambda",
            range: "(0, inf)",
            got: lambda,
        });
    }
    regularize(mean, cov, d.n_negatives(), lambda)
}

fn negative_moments(d: &Dataset) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let refs = canonical_refs(d.negatives());
    let n = refs.len();
    if n < 2 {
        return Err(Error::TooFewNegatives {
            needed: 2,
            found: n,
        });
    }
    let dim = d.dim();
    let mut mean = DVector::zeros(dim);
    for ex in &refs {
        for (a, f) in mean.iter_mut().zip(&ex.features) {
            *a += f;
        }
    }
    mean /= n as f64;
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("negative-class mean"));
    }
    let mut cov = DMatrix::zeros(dim, dim);
    let mut centered = DVector::zeros(dim);
    for ex in &refs {
        for ((c, f), m) in centered.iter_mut().zip(&ex.features).zip(mean.iter()) {
            *c = f - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            for j in i..dim {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    cov /= (n - 1) as f64;
    // mirror the upper triangle
    for i in 0..dim {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    Ok((mean, cov))
}

fn regularize(
    mean: DVector<f64>,
    mut cov: DMatrix<f64>,
    count: usize,
    lambda: f64,
) -> Result<NegativeStatistics> {
    let dim = mean.len();
    for i in 0..dim {
        cov[(i, i)] += lambda;
    }
    let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
        Error::Numerical("regularized covariance is not positive definite".into())
    })?;
    Ok(NegativeStatistics {
        mean,
        cov_reg: cov,
        chol,
        count,
        lambda,
    })
}

/// Trains LDA with the positive-class mean of `d` against the shared
/// negative statistics: `Σ_reg w = μ+ − μ−`, `b = −w · (μ+ + μ−)/2`.
pub fn train_lda(d: &Dataset, stats: &NegativeStatistics) -> Result<LinearModel> {
    let positives = canonical_refs(d.positives());
    if positives.is_empty() {
        return Err(Error::NoPositives);
    }
    train_lda_on(&positives, stats)
}

pub(crate) fn train_lda_on(
    positives: &[&Example],
    stats: &NegativeStatistics,
) -> Result<LinearModel> {
    note_training_call();
    if positives.is_empty() {
        return Err(Error::NoPositives);
    }
    let dim = stats.dim();
    let mut mu_pos = DVector::zeros(dim);
    for ex in positives {
        if ex.features.len() != dim {
            return Err(Error::LengthMismatch(ex.features.len(), dim));
        }
        for (a, f) in mu_pos.iter_mut().zip(&ex.features) {
            *a += f;
        }
    }
    mu_pos /= positives.len() as f64;
    solve_lda(&mu_pos, stats)
}

/// Trains the exemplar model of `x`: LDA with the positive mean replaced by
/// the exemplar's feature vector.
pub fn train_exemplar_lda(x: &Example, stats: &NegativeStatistics) -> Result<LinearModel> {
    if !x.label.is_positive() {
        return Err(Error::NotPositive(x.id.clone()));
    }
    note_training_call();
    if x.features.len() != stats.dim() {
        return Err(Error::LengthMismatch(x.features.len(), stats.dim()));
    }
    let mu_pos = DVector::from_column_slice(&x.features);
    solve_lda(&mu_pos, stats)
}

fn solve_lda(mu_pos: &DVector<f64>, stats: &NegativeStatistics) -> Result<LinearModel> {
    if mu_pos.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("positive-class mean"));
    }
    let delta = mu_pos - &stats.mean;
    let w = stats.solve(&delta);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("LDA weights are not finite".into()));
    }
    let mid = (mu_pos + &stats.mean) / 2.0;
    let bias = -w.dot(&mid);
    Ok(LinearModel {
        weights: w.as_slice().to_vec(),
        bias,
    })
}
