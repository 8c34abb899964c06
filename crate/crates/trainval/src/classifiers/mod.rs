//! The classifier family: LDA, exemplar LDA, linear SVM and kernel SVM.
//!
//! Every trainer is deterministic. Examples are visited in ascending-id
//! order no matter how the dataset is ordered, so permuting a dataset never
//! changes a trained model.

mod kernel;
mod lda;
mod svm;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::metrics::{average_precision, ScoredLabel};

pub use kernel::{histogram_intersection, train_kernel_svm};
pub use lda::{fit_negative_statistics, train_exemplar_lda, train_lda, NegativeStatistics};
pub(crate) use lda::fit_negative_statistics_for;
pub use svm::train_linear_svm;

/// Which classifier family to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lda,
    LinearSvm,
    KernelSvm,
}

/// Kernel used by the kernel SVM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    HistogramIntersection,
    Linear,
}

/// Classifier settings; fields irrelevant to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ModelKind,
    /// Covariance shrinkage for LDA as a fraction of `trace(Σ)/D`. When the
    /// sample covariance has zero trace the value is used as an absolute λ.
    pub shrinkage: f64,
    /// Soft-margin cost C for the SVMs.
    pub cost: f64,
    /// Maximum dual KKT violation accepted at convergence.
    pub tolerance: f64,
    /// Outer-pass cap for the SVM solvers; `None` means `10 · n_examples`.
    pub max_iterations: Option<usize>,
    /// Kernel for `KernelSvm`.
    pub kernel: KernelKind,
}

impl ClassifierConfig {
    pub fn lda() -> Self {
        Self {
            kind: ModelKind::Lda,
            shrinkage: 0.1,
            cost: 1.0,
            tolerance: 1e-4,
            max_iterations: None,
            kernel: KernelKind::HistogramIntersection,
        }
    }

    pub fn linear_svm() -> Self {
        Self {
            kind: ModelKind::LinearSvm,
            ..Self::lda()
        }
    }

    pub fn kernel_svm(kernel: KernelKind) -> Self {
        Self {
            kind: ModelKind::KernelSvm,
            kernel,
            ..Self::lda()
        }
    }

    pub fn with_shrinkage(mut self, shrinkage: f64) -> Self {
        self.shrinkage = shrinkage;
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = Some(max_iterations);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shrinkage >= 0.0 && self.shrinkage.is_finite()) {
            return Err(Error::OutOfRange {
                what: "shrinkage",
                range: "[0, inf)",
                got: self.shrinkage,
            });
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::OutOfRange {
                what: "cost",
                range: "(0, inf)",
                got: self.cost,
            });
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::OutOfRange {
                what: "tolerance",
                range: "(0, inf)",
                got: self.tolerance,
            });
        }
        if self.max_iterations == Some(0) {
            return Err(Error::OutOfRange {
                what: "max iterations",
                range: "[1, inf)",
                got: 0.0,
            });
        }
        Ok(())
    }
}

/// A hyperplane scorer `f(x) = w · x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }
}

/// A kernel expansion `f(x) = Σ_j (α_j y_j) K(s_j, x) + b` over the
/// retained support vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    pub support_ids: Vec<String>,
    /// `α_j · y_j` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelKind,
    pub support_vectors: Vec<Vec<f64>>,
}

/// Any trained scorer.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Dual(DualModel),
}

impl Model {
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        match self {
            Model::Linear(m) => {
                if m.weights.len() != features.len() {
                    return Err(Error::LengthMismatch(m.weights.len(), features.len()));
                }
                Ok(dot(&m.weights, features) + m.bias)
            }
            Model::Dual(m) => {
                let mut sum = m.bias;
                for (sv, coeff) in m.support_vectors.iter().zip(&m.coefficients) {
                    if sv.len() != features.len() {
                        return Err(Error::LengthMismatch(sv.len(), features.len()));
                    }
                    let k = match m.kernel {
                        KernelKind::Linear => dot(sv, features),
                        KernelKind::HistogramIntersection => {
                            histogram_intersection(sv, features)?
                        }
                    };
                    sum += coeff * k;
                }
                Ok(sum)
            }
        }
    }
}

/// Solver diagnostics attached to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub converged: bool,
    pub outer_iterations: usize,
    /// Dual objective (minimization form) after each outer pass.
    pub objective_trace: Vec<f64>,
}

impl TrainMeta {
    /// Metadata for closed-form trainers.
    pub fn direct() -> Self {
        Self {
            converged: true,
            outer_iterations: 0,
            objective_trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub meta: TrainMeta,
}

static TRAIN_CALLS: AtomicU64 = AtomicU64::new(0);

pub(crate) fn note_training_call() {
    TRAIN_CALLS.fetch_add(1, Ordering::Relaxed);
}

/// Number of model trainings performed by this process so far. Useful for
/// asserting that drivers train once per prefix instead of once per
/// evaluation.
pub fn training_call_count() -> u64 {
    TRAIN_CALLS.load(Ordering::Relaxed)
}

/// Trains `cfg`'s classifier on the full dataset.
pub fn train_with_config(d: &Dataset, cfg: &ClassifierConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    match cfg.kind {
        ModelKind::Lda => {
            let stats = lda::fit_negative_statistics_for(d, cfg)?;
            Ok(TrainedModel {
                model: Model::Linear(train_lda(d, &stats)?),
                meta: TrainMeta::direct(),
            })
        }
        ModelKind::LinearSvm => {
            let (model, meta) = train_linear_svm(d, cfg)?;
            Ok(TrainedModel {
                model: Model::Linear(model),
                meta,
            })
        }
        ModelKind::KernelSvm => {
            let (model, meta) = train_kernel_svm(d, cfg)?;
            Ok(TrainedModel {
                model: Model::Dual(model),
                meta,
            })
        }
    }
}

/// Trains `cfg`'s classifier on the chosen positives plus all negatives of
/// `d`. `stats` may carry negative statistics precomputed once for `d` when
/// training repeatedly with LDA.
pub fn train_on_positive_subset(
    d: &Dataset,
    positive_ids: &[String],
    cfg: &ClassifierConfig,
    stats: Option<&NegativeStatistics>,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if positive_ids.is_empty() {
        return Err(Error::NoPositives);
    }
    let mut positives = Vec::with_capacity(positive_ids.len());
    for id in positive_ids {
        let ex = d.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        if !ex.label.is_positive() {
            return Err(Error::NotPositive(id.clone()));
        }
        positives.push(ex);
    }
    match cfg.kind {
        ModelKind::Lda => {
            let owned;
            let stats = match stats {
                Some(s) => s,
                None => {
                    owned = lda::fit_negative_statistics_for(d, cfg)?;
                    &owned
                }
            };
            Ok(TrainedModel {
                model: Model::Linear(lda::train_lda_on(&positives, stats)?),
                meta: TrainMeta::direct(),
            })
        }
        ModelKind::LinearSvm | ModelKind::KernelSvm => {
            let mut examples: Vec<&Example> = positives;
            examples.extend(d.negatives());
            if cfg.kind == ModelKind::LinearSvm {
                let (model, meta) = svm::train_linear_svm_on(&examples, cfg)?;
                Ok(TrainedModel {
                    model: Model::Linear(model),
                    meta,
                })
            } else {
                let (model, meta) = kernel::train_kernel_svm_on(&examples, cfg)?;
                Ok(TrainedModel {
                    model: Model::Dual(model),
                    meta,
                })
            }
        }
    }
}

/// Scores every example of `d` and returns the average precision.
pub fn evaluate_model(model: &Model, d: &Dataset) -> Result<f64> {
    let mut scored = Vec::with_capacity(d.len());
    for ex in d.examples() {
        scored.push(ScoredLabel::new(
            ex.id.clone(),
            model.score(&ex.features)?,
            ex.label,
        ));
    }
    average_precision(&scored)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Training examples sorted by ascending id; the canonical visitation order.
pub(crate) fn canonical_refs<'a>(examples: impl Iterator<Item = &'a Example>) -> Vec<&'a Example> {
    let mut refs: Vec<&Example> = examples.collect();
    refs.sort_by(|a, b| a.id.cmp(&b.id));
    refs
}
