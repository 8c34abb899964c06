//! Kernel soft-margin SVM over a cached Gram matrix.
//!
//! Optimizes the same box-constrained dual as the linear trainer —
//! `min ½ αᵀQα − Σα` with `Q_ij = y_i y_j (K(x_i, x_j) + 1)` — by pairwise
//! working-set steps: the two most violating coordinates are selected and
//! their two-variable subproblem is solved exactly on the box. The `+1`
//! augments the kernel with a constant feature, which is where the bias
//! comes from (`b = Σ α_i y_i`).
//!
//! The full Gram matrix is cached, so memory is O(N²).

use super::svm::violation;
use super::{canonical_refs, dot, note_training_call, ClassifierConfig, DualModel, KernelKind,
            TrainMeta};
use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};

/// Histogram-intersection kernel `Σ_k min(x_k, y_k)` for nonnegative
/// vectors.
pub fn histogram_intersection(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let mut sum = 0.0;
    for (i, (a, b)) in x.iter().zip(y).enumerate() {
        if *a < 0.0 || *b < 0.0 {
            return Err(Error::NegativeFeature(format!("component {i}")));
        }
        sum += a.min(*b);
    }
    Ok(sum)
}

fn kernel_eval(kind: KernelKind, x: &[f64], y: &[f64]) -> Result<f64> {
    match kind {
        KernelKind::Linear => Ok(dot(x, y)),
        KernelKind::HistogramIntersection => histogram_intersection(x, y),
    }
}

pub fn train_kernel_svm(
    d: &Dataset,
    cfg: &ClassifierConfig,
) -> Result<(DualModel, TrainMeta)> {
    let refs = canonical_refs(d.examples().iter());
    train_kernel_svm_on(&refs, cfg)
}

pub(crate) fn train_kernel_svm_on(
    examples: &[&Example],
    cfg: &ClassifierConfig,
) -> Result<(DualModel, TrainMeta)> {
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
    for ex in &refs {
        if ex.features.len() != dim {
            return Err(Error::LengthMismatch(ex.features.len(), dim));
        }
        for f in &ex.features {
            if !f.is_finite() {
                return Err(Error::NonFinite("example features"));
            }
            if cfg.kernel == KernelKind::HistogramIntersection && *f < 0.0 {
                return Err(Error::NegativeFeature(ex.id.clone()));
            }
        }
    }
    note_training_call();

    // Gram matrix of the augmented kernel, in y-signed form Q.
    let y: Vec<f64> = refs.iter().map(|e| e.label.as_f64()).collect();
    let mut q = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel_eval(cfg.kernel, &refs[i].features, &refs[j].features)? + 1.0;
            let v = y[i] * y[j] * k;
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }

    let cost = cfg.cost;
    let max_passes = cfg.max_iterations.unwrap_or(10 * n.max(1));
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n]; // Qα − 1 at α = 0
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut passes = 0;

    'outer: while passes < max_passes {
        passes += 1;
        for _ in 0..n {
            // two most violating coordinates, ties to the lowest index
            let mut first = (0usize, -1.0f64);
            let mut second = (usize::MAX, -1.0f64);
            for i in 0..n {
                let v = violation(alpha[i], grad[i], cost);
                if v > first.1 {
                    second = first;
                    first = (i, v);
                } else if v > second.1 {
                    second = (i, v);
                }
            }
            if first.1 <= cfg.tolerance {
                converged = true;
                push_objective(&mut objective_trace, &alpha, &grad);
                break 'outer;
            }
            let (i, j) = if second.0 == usize::MAX {
                (first.0, first.0)
            } else {
                (first.0, second.0)
            };
            let (di, dj) = if i == j {
                let d = step_1d(alpha[i], grad[i], q[i * n + i], cost);
                (d, 0.0)
            } else {
                solve_pair(
                    [q[i * n + i], q[i * n + j], q[j * n + j]],
                    [grad[i], grad[j]],
                    [-alpha[i], -alpha[j]],
                    [cost - alpha[i], cost - alpha[j]],
                )
            };
            if di != 0.0 || dj != 0.0 {
                alpha[i] += di;
                alpha[j] += dj;
                for t in 0..n {
                    grad[t] += q[i * n + t] * di + q[j * n + t] * dj;
                }
            }
        }
        push_objective(&mut objective_trace, &alpha, &grad);
    }

    let mut support_ids = Vec::new();
    let mut coefficients = Vec::new();
    let mut support_vectors = Vec::new();
    let mut bias = 0.0;
    for i in 0..n {
        bias += alpha[i] * y[i];
        if alpha[i] > 0.0 {
            support_ids.push(refs[i].id.clone());
            coefficients.push(alpha[i] * y[i]);
            support_vectors.push(refs[i].features.clone());
        }
    }

    Ok((
        DualModel {
            support_ids,
            coefficients,
            bias,
            kernel: cfg.kernel,
            support_vectors,
        },
        TrainMeta {
            converged,
            outer_iterations: passes,
            objective_trace,
        },
    ))
}

/// Dual objective ½ αᵀQα − Σα computed from the maintained gradient:
/// αᵀQα = αᵀ(G + 1) so the objective is ½ αᵀG − ½ Σα.
fn push_objective(trace: &mut Vec<f64>, alpha: &[f64], grad: &[f64]) {
    let ag: f64 = alpha.iter().zip(grad).map(|(a, g)| a * g).sum();
    let asum: f64 = alpha.iter().sum();
    trace.push(0.5 * ag - 0.5 * asum);
}

/// Exact clipped Newton step for one coordinate.
fn step_1d(alpha: f64, grad: f64, qii: f64, cost: f64) -> f64 {
    (alpha - grad / qii).clamp(0.0, cost) - alpha
}

/// Exact minimizer of `½ dᵀ[qii qij; qij qjj]d + gᵀd` over the box
/// `[lo, hi]²`: take the unconstrained solution when it is feasible,
/// otherwise the best of the four clamped edges.
fn solve_pair(qs: [f64; 3], g: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> (f64, f64) {
    let [qii, qij, qjj] = qs;
    let objective = |di: f64, dj: f64| {
        0.5 * (qii * di * di + 2.0 * qij * di * dj + qjj * dj * dj) + g[0] * di + g[1] * dj
    };
    let det = qii * qjj - qij * qij;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut consider = |di: f64, dj: f64| {
        let di = di.clamp(lo[0], hi[0]);
        let dj = dj.clamp(lo[1], hi[1]);
        let val = objective(di, dj);
        if best.map_or(true, |(v, _, _)| val < v) {
            best = Some((val, di, dj));
        }
    };
    if det > 1e-12 * qii.max(qjj).max(1.0) {
        let di = (-g[0] * qjj + g[1] * qij) / det;
        let dj = (-g[1] * qii + g[0] * qij) / det;
        if di >= lo[0] && di <= hi[0] && dj >= lo[1] && dj <= hi[1] {
            return (di, dj);
        }
    }
    // edges: one coordinate fixed at a bound, the other minimized in closed
    // form and clamped
    for &di in &[lo[0], hi[0]] {
        consider(di, -(g[1] + qij * di) / qjj);
    }
    for &dj in &[lo[1], hi[1]] {
        consider(-(g[0] + qij * dj) / qii, dj);
    }
    let (_, di, dj) = best.expect("edge candidates are always present");
    (di, dj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{evaluate_model, train_linear_svm, Model};
    use crate::dataset::Label;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_hand_values() {
        assert_abs_diff_eq!(
            histogram_intersection(&[0.2, 0.8], &[0.5, 0.5]).unwrap(),
            0.7,
            epsilon = 1e-15
        );
        let x = [0.3, 0.1, 0.6];
        assert_abs_diff_eq!(
            histogram_intersection(&x, &x).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(histogram_intersection(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn kernel_rejects_bad_input() {
        assert!(histogram_intersection(&[1.0], &[1.0, 2.0]).is_err());
        assert!(histogram_intersection(&[-0.1], &[1.0]).is_err());
    }

    fn separable_histograms() -> Dataset {
        let mut examples = Vec::new();
        for i in 0..5 {
            let t = i as f64 * 0.02;
            examples.push(Example::new(
                format!("p{i}"),
                Label::Positive,
                vec![0.7 - t, 0.2, 0.1 + t],
            ));
            examples.push(Example::new(
                format!("n{i}"),
                Label::Negative,
                vec![0.1 + t, 0.2, 0.7 - t],
            ));
        }
        Dataset::new(examples).unwrap()
    }

    #[test]
    fn separable_data_reaches_training_ap_one() {
        let d = separable_histograms();
        let cfg = ClassifierConfig::kernel_svm(KernelKind::HistogramIntersection)
            .with_cost(10.0)
            .with_tolerance(1e-6);
        let (m, meta) = train_kernel_svm(&d, &cfg).unwrap();
        assert!(meta.converged);
        let ap = evaluate_model(&Model::Dual(m), &d).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn alphas_respect_box_bounds() {
        let d = separable_histograms();
        let cost = 0.7;
        let cfg = ClassifierConfig::kernel_svm(KernelKind::HistogramIntersection)
            .with_cost(cost)
            .with_tolerance(1e-6);
        let (m, _) = train_kernel_svm(&d, &cfg).unwrap();
        for (coeff, id) in m.coefficients.iter().zip(&m.support_ids) {
            let a = coeff.abs();
            assert!(a > 0.0 && a <= cost + 1e-12, "alpha {a} out of box for {id}");
        }
    }

    #[test]
    fn linear_kernel_matches_linear_trainer() {
        let d = Dataset::new(vec![
            Example::new("a", Label::Positive, vec![1.3, 0.2]),
            Example::new("b", Label::Positive, vec![0.8, 0.7]),
            Example::new("c", Label::Positive, vec![1.1, -0.4]),
            Example::new("d", Label::Negative, vec![-0.9, 0.1]),
            Example::new("e", Label::Negative, vec![-1.2, 0.5]),
            Example::new("f", Label::Negative, vec![-0.4, -0.8]),
        ])
        .unwrap();
        let cfg = ClassifierConfig::linear_svm()
            .with_cost(1.5)
            .with_tolerance(1e-8);
        let kcfg = ClassifierConfig::kernel_svm(KernelKind::Linear)
            .with_cost(1.5)
            .with_tolerance(1e-8);
        let (lm, _) = train_linear_svm(&d, &cfg).unwrap();
        let (km, _) = train_kernel_svm(&d, &kcfg).unwrap();
        let linear = Model::Linear(lm);
        let dual = Model::Dual(km);
        for ex in d.examples() {
            let a = linear.score(&ex.features).unwrap();
            let b = dual.score(&ex.features).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-4);
        }
    }

    #[test]
    fn kernel_objective_trace_never_increases() {
        let d = separable_histograms();
        let cfg = ClassifierConfig::kernel_svm(KernelKind::HistogramIntersection).with_cost(2.0);
        let (_, meta) = train_kernel_svm(&d, &cfg).unwrap();
        for pair in meta.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn histogram_kernel_rejects_negative_features() {
        let d = Dataset::new(vec![
            Example::new("p", Label::Positive, vec![0.5, -0.1]),
            Example::new("n", Label::Negative, vec![0.2, 0.3]),
        ])
        .unwrap();
        let cfg = ClassifierConfig::kernel_svm(KernelKind::HistogramIntersection);
        assert!(matches!(
            train_kernel_svm(&d, &cfg),
            Err(Error::NegativeFeature(id)) if id == "p"
        ));
    }

    #[test]
    fn single_class_is_rejected() {
        let d = Dataset::new(vec![
            Example::new("a", Label::Negative, vec![0.5]),
            Example::new("b", Label::Negative, vec![0.2]),
        ])
        .unwrap();
        let cfg = ClassifierConfig::kernel_svm(KernelKind::Linear);
        assert!(matches!(train_kernel_svm(&d, &cfg), Err(Error::NoPositives)));
    }
}
