//! Linear soft-margin SVM trained by dual coordinate descent.
//!
//! Solves `min ½(‖w‖² + b²) + C Σ max(0, 1 − y_i (w·x_i + b))`; the bias is
//! regularized by folding a constant unit feature into the dual, which makes
//! the dual box-constrained with no equality constraint:
//!
//! `min ½ αᵀQα − Σα,  0 ≤ α ≤ C,  Q_ij = y_i y_j (x_i·x_j + 1)`.
//!
//! Coordinates are visited in ascending-id order with exact clipped Newton
//! steps, so training is deterministic. The kernel solver optimizes the same
//! dual (with the kernel in place of the dot product), which is what makes
//! the two routes comparable on linear problems.

use super::{canonical_refs, dot, note_training_call, ClassifierConfig, LinearModel, TrainMeta};
use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};

/// KKT violation of one dual coordinate given its projected gradient.
pub(crate) fn violation(alpha: f64, grad: f64, cost: f64) -> f64 {
    if alpha <= 0.0 {
        (-grad).max(0.0)
    } else if alpha >= cost {
        grad.max(0.0)
    } else {
        grad.abs()
    }
}

pub fn train_linear_svm(
    d: &Dataset,
    cfg: &ClassifierConfig,
) -> Result<(LinearModel, TrainMeta)> {
    let refs = canonical_refs(d.examples().iter());
    train_linear_svm_on(&refs, cfg)
}

pub(crate) fn train_linear_svm_on(
    examples: &[&Example],
    cfg: &ClassifierConfig,
) -> Result<(LinearModel, TrainMeta)> {
    cfg.validate()?;
    let refs = canonical_refs(examples.iter().copied());
    let n = refs.len();
    if !refs.iter().any(|e| e.label.is_positive()) {
        return Err(Error::NoPositives);
    }
    if !refs.iter().any(|e| !e.label.is_positive()) {
        return Err(Error::NoNegatives);
    }
    let dim = refs[0].features.len();
    let mut qii = Vec::with_capacity(n);
    for ex in &refs {
        if ex.features.len() != dim {
            return Err(Error::LengthMismatch(ex.features.len(), dim));
        }
        let norm2 = dot(&ex.features, &ex.features);
        if !norm2.is_finite() {
            return Err(Error::NonFinite("example features"));
        }
        qii.push(norm2 + 1.0);
    }
    note_training_call();

    let cost = cfg.cost;
    let max_passes = cfg.max_iterations.unwrap_or(10 * n.max(1));
    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut passes = 0;

    while passes < max_passes {
        passes += 1;
        let mut max_violation = 0.0f64;
        for i in 0..n {
            let ex = refs[i];
            let y = ex.label.as_f64();
            let grad = y * (dot(&w, &ex.features) + b) - 1.0;
            max_violation = max_violation.max(violation(alpha[i], grad, cost));
            let new_alpha = (alpha[i] - grad / qii[i]).clamp(0.0, cost);
            let delta = new_alpha - alpha[i];
            if delta != 0.0 {
                alpha[i] = new_alpha;
                let dy = delta * y;
                for (wk, xk) in w.iter_mut().zip(&ex.features) {
                    *wk += dy * xk;
                }
                b += dy;
            }
        }
        let alpha_sum: f64 = alpha.iter().sum();
        objective_trace.push(0.5 * (dot(&w, &w) + b * b) - alpha_sum);
        if max_violation <= cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok((
        LinearModel { weights: w, bias: b },
        TrainMeta {
            converged,
            outer_iterations: passes,
            objective_trace,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use approx::assert_abs_diff_eq;

    fn ds(examples: Vec<(&str, Label, Vec<f64>)>) -> Dataset {
        Dataset::new(
            examples
                .into_iter()
                .map(|(id, l, f)| Example::new(id, l, f))
                .collect(),
        )
        .unwrap()
    }

    fn hinge_loss(m: &LinearModel, d: &Dataset) -> f64 {
        d.examples()
            .iter()
            .map(|e| {
                let f = dot(&m.weights, &e.features) + m.bias;
                (1.0 - e.label.as_f64() * f).max(0.0)
            })
            .sum()
    }

    #[test]
    fn hand_solved_one_dimensional_margin() {
        // points x = −1 (neg) and x = +1 (pos): margin constraints active at
        // both, minimizing ‖w‖² + b² gives w = 1, b = 0.
        let d = ds(vec![
            ("n", Label::Negative, vec![-1.0]),
            ("p", Label::Positive, vec![1.0]),
        ]);
        let cfg = ClassifierConfig::linear_svm()
            .with_cost(1e4)
            .with_tolerance(1e-8);
        let (m, meta) = train_linear_svm(&d, &cfg).unwrap();
        assert!(meta.converged);
        assert_abs_diff_eq!(m.weights[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(m.bias, 0.0, epsilon = 1e-4);
    }

    #[test]
    fn separable_blobs_reach_zero_hinge() {
        let mut examples = Vec::new();
        for i in 0..6 {
            let t = i as f64 * 0.13;
            examples.push((format!("p{i}"), Label::Positive, vec![2.0 + t, 1.0 - t]));
            examples.push((format!("n{i}"), Label::Negative, vec![-2.0 - t, -1.0 + t]));
        }
        let d = Dataset::new(
            examples
                .into_iter()
                .map(|(id, l, f)| Example::new(id, l, f))
                .collect(),
        )
        .unwrap();
        let cfg = ClassifierConfig::linear_svm()
            .with_cost(1e4)
            .with_tolerance(1e-8);
        let (m, _) = train_linear_svm(&d, &cfg).unwrap();
        assert!(hinge_loss(&m, &d) <= 1e-6);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let d = ds(vec![
            ("a", Label::Positive, vec![1.2, 0.3]),
            ("b", Label::Positive, vec![0.9, -0.1]),
            ("c", Label::Negative, vec![-1.0, 0.2]),
            ("d", Label::Negative, vec![-0.7, -0.9]),
        ]);
        let cfg = ClassifierConfig::linear_svm();
        let (m1, meta1) = train_linear_svm(&d, &cfg).unwrap();
        let (m2, meta2) = train_linear_svm(&d, &cfg).unwrap();
        assert_eq!(m1.weights, m2.weights);
        assert_eq!(m1.bias, m2.bias);
        assert_eq!(meta1.objective_trace, meta2.objective_trace);
    }

    #[test]
    fn permuting_the_dataset_changes_nothing() {
        let mut examples = vec![
            Example::new("a", Label::Positive, vec![1.2, 0.3]),
            Example::new("b", Label::Positive, vec![0.9, -0.1]),
            Example::new("c", Label::Negative, vec![-1.0, 0.2]),
            Example::new("d", Label::Negative, vec![-0.7, -0.9]),
        ];
        let d1 = Dataset::new(examples.clone()).unwrap();
        examples.reverse();
        let d2 = Dataset::new(examples).unwrap();
        let cfg = ClassifierConfig::linear_svm();
        let (m1, _) = train_linear_svm(&d1, &cfg).unwrap();
        let (m2, _) = train_linear_svm(&d2, &cfg).unwrap();
        assert_eq!(m1.weights, m2.weights);
        assert_eq!(m1.bias, m2.bias);
    }

    #[test]
    fn objective_trace_never_increases() {
        let d = ds(vec![
            ("a", Label::Positive, vec![0.5, 1.0]),
            ("b", Label::Positive, vec![0.1, 0.8]),
            ("c", Label::Positive, vec![0.4, -0.2]),
            ("d", Label::Negative, vec![-0.5, -1.0]),
            ("e", Label::Negative, vec![-0.1, -0.4]),
            ("f", Label::Negative, vec![0.2, -0.6]),
        ]);
        let cfg = ClassifierConfig::linear_svm().with_cost(3.0);
        let (_, meta) = train_linear_svm(&d, &cfg).unwrap();
        for pair in meta.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let d = ds(vec![
            ("a", Label::Positive, vec![1.0]),
            ("b", Label::Positive, vec![2.0]),
        ]);
        assert!(matches!(
            train_linear_svm(&d, &ClassifierConfig::linear_svm()),
            Err(Error::NoNegatives)
        ));
    }

    #[test]
    fn iteration_cap_is_flagged_not_fatal() {
        let d = ds(vec![
            ("a", Label::Positive, vec![1.0, 0.0]),
            ("b", Label::Negative, vec![0.99, 0.0]),
            ("c", Label::Negative, vec![-1.0, 0.1]),
        ]);
        let cfg = ClassifierConfig::linear_svm()
            .with_cost(1e6)
            .with_tolerance(1e-12)
            .with_max_iterations(2);
        let (_, meta) = train_linear_svm(&d, &cfg).unwrap();
        assert!(!meta.converged);
        assert_eq!(meta.outer_iterations, 2);
    }
}
