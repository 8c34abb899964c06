//! Average precision, precision/recall curves, peak statistics and rank
//! correlation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

/// A classifier output paired with the ground-truth label it is scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabel {
    pub id: String,
    pub score: f64,
    pub label: Label,
}

impl ScoredLabel {
    pub fn new(id: impl Into<String>, score: f64, label: Label) -> Self {
        Self {
            id: id.into(),
            score,
            label,
        }
    }
}

/// Which average-precision formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApVariant {
    /// Mean of the precision values at the ranks of the positives.
    #[default]
    Standard,
    /// Precision envelope interpolated at recalls 0, 0.1, …, 1.0.
    ElevenPoint,
}

/// One point of a precision/recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision/recall curve with one point per rank position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub ap: f64,
}

/// Sorts by descending score, breaking ties by ascending id, and returns the
/// indices into `scored`. Errors on a non-finite score or when no positive
/// label is present.
fn ranked_order(scored: &[ScoredLabel]) -> Result<Vec<usize>> {
    if !scored.iter().any(|s| s.label.is_positive()) {
        return Err(Error::NoPositiveScores);
    }
    for s in scored {
        if !s.score.is_finite() {
            return Err(Error::NonFiniteScore { id: s.id.clone() });
        }
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .score
            .partial_cmp(&scored[a].score)
            .expect("scores are finite")
            .then_with(|| scored[a].id.cmp(&scored[b].id))
    });
    Ok(order)
}

/// Average precision of a scored list.
///
/// The list is sorted by descending score (ties by ascending id) and AP is
/// `(1/P) Σ_{k : label_k = +1} (positives in top k) / k`.
pub fn average_precision(scored: &[ScoredLabel]) -> Result<f64> {
    average_precision_with(scored, ApVariant::Standard)
}

pub fn average_precision_with(scored: &[ScoredLabel], variant: ApVariant) -> Result<f64> {
    match variant {
        ApVariant::Standard => {
            let order = ranked_order(scored)?;
            let total_pos = scored.iter().filter(|s| s.label.is_positive()).count();
            let mut tp = 0usize;
            let mut sum = 0.0;
            for (k, &i) in order.iter().enumerate() {
                if scored[i].label.is_positive() {
                    tp += 1;
                    sum += tp as f64 / (k + 1) as f64;
                }
            }
            Ok(sum / total_pos as f64)
        }
        ApVariant::ElevenPoint => {
            let curve = pr_curve(scored)?;
            let mut sum = 0.0;
            for i in 0..=10 {
                let r = i as f64 / 10.0;
                let p = curve
                    .points
                    .iter()
                    .filter(|pt| pt.recall >= r)
                    .map(|pt| pt.precision)
                    .fold(0.0, f64::max);
                sum += p;
            }
            Ok(sum / 11.0)
        }
    }
}

/// Precision/recall curve over the ranked list; `ap` is the standard
/// average precision of the same input.
pub fn pr_curve(scored: &[ScoredLabel]) -> Result<PrCurve> {
    let order = ranked_order(scored)?;
    let total_pos = scored.iter().filter(|s| s.label.is_positive()).count();
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(order.len());
    let mut ap = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if scored[i].label.is_positive() {
            tp += 1;
            ap += tp as f64 / (k + 1) as f64;
        }
        points.push(PrPoint {
            recall: tp as f64 / total_pos as f64,
            precision: tp as f64 / (k + 1) as f64,
        });
    }
    Ok(PrCurve {
        points,
        ap: ap / total_pos as f64,
    })
}

/// One sample of a performance-versus-subset-size curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub subset_size: usize,
    pub fraction: f64,
    pub test_ap: f64,
}

/// Peak statistics of a performance curve whose last point is the full
/// training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peak_ap: f64,
    pub full_ap: f64,
    /// `peak_ap - full_ap`; nonnegative because the full-set point is a
    /// candidate for the peak.
    pub improvement: f64,
    /// Fraction of the training positives used at the peak.
    pub peak_fraction: f64,
    pub peak_size: usize,
    pub total_size: usize,
}

/// Finds the peak of a curve. Equal peak values resolve to the smallest
/// subset size.
pub fn peak_analysis(points: &[CurvePoint]) -> Result<PeakReport> {
    let Some(last) = points.last() else {
        return Err(Error::EmptyCurve);
    };
    let mut best = &points[0];
    for p in &points[1..] {
        if p.test_ap > best.test_ap {
            best = p;
        }
    }
    Ok(PeakReport {
        peak_ap: best.test_ap,
        full_ap: last.test_ap,
        improvement: best.test_ap - last.test_ap,
        peak_fraction: best.subset_size as f64 / last.subset_size as f64,
        peak_size: best.subset_size,
        total_size: last.subset_size,
    })
}

/// Spearman rank correlation between the positions in `ordered_ids` (first
/// position is rank 1) and the descending-score ranks of `scores`, with tied
/// scores receiving average ranks.
pub fn spearman_rank_correlation(
    ordered_ids: &[String],
    scores: &HashMap<String, f64>,
) -> Result<f64> {
    let n = ordered_ids.len();
    if n < 2 {
        return Err(Error::TooFewItems {
            what: "rank correlation",
            needed: 2,
            got: n,
        });
    }
    let mut vals = Vec::with_capacity(n);
    for id in ordered_ids {
        match scores.get(id) {
            Some(v) if v.is_finite() => vals.push(*v),
            Some(_) => return Err(Error::NonFiniteScore { id: id.clone() }),
            None => return Err(Error::MissingScore(id.clone())),
        }
    }
    // ranks of `ordered_ids` are just 1..=n
    let rank_a: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let rank_b = average_ranks_descending(&vals);
    Ok(pearson(&rank_a, &rank_b))
}

/// Descending ranks (largest value gets rank 1); ties get averaged ranks.
fn average_ranks_descending(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).expect("finite"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && vals[order[j + 1]] == vals[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sl(id: &str, score: f64, pos: bool) -> ScoredLabel {
        ScoredLabel::new(
            id,
            score,
            if pos { Label::Positive } else { Label::Negative },
        )
    }

    #[test]
    fn perfect_ranking_gives_one() {
        let scored = vec![
            sl("a", 3.0, true),
            sl("b", 2.0, true),
            sl("c", 1.0, false),
            sl("d", 0.0, false),
        ];
        assert_eq!(average_precision(&scored).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_three_items() {
        // ranked (+, −, +): (1/2) (1/1 + 2/3) = 5/6
        let scored = vec![sl("a", 3.0, true), sl("b", 2.0, false), sl("c", 1.0, true)];
        assert_abs_diff_eq!(
            average_precision(&scored).unwrap(),
            5.0 / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_positive_ranked_last() {
        let scored = vec![
            sl("a", 4.0, false),
            sl("b", 3.0, false),
            sl("c", 2.0, false),
            sl("d", 1.0, true),
        ];
        assert_abs_diff_eq!(average_precision(&scored).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn no_positives_is_an_error() {
        let scored = vec![sl("a", 1.0, false)];
        assert!(matches!(
            average_precision(&scored),
            Err(Error::NoPositiveScores)
        ));
    }

    #[test]
    fn non_finite_score_is_an_error() {
        let scored = vec![sl("a", f64::NAN, true)];
        assert!(matches!(
            average_precision(&scored),
            Err(Error::NonFiniteScore { .. })
        ));
    }

    #[test]
    fn ties_break_by_ascending_id() {
        // equal scores: order is a, b, c by id; labels (+, −, +) → 5/6
        let scored = vec![sl("c", 0.0, true), sl("a", 0.0, true), sl("b", 0.0, false)];
        assert_abs_diff_eq!(
            average_precision(&scored).unwrap(),
            5.0 / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn pr_curve_two_items() {
        let scored = vec![sl("a", 2.0, true), sl("b", 1.0, false)];
        let c = pr_curve(&scored).unwrap();
        assert_eq!(
            c.points,
            vec![
                PrPoint {
                    recall: 1.0,
                    precision: 1.0
                },
                PrPoint {
                    recall: 1.0,
                    precision: 0.5
                },
            ]
        );
        assert_eq!(c.ap, 1.0);
    }

    #[test]
    fn pr_curve_recall_sequence() {
        let scored = vec![sl("a", 3.0, true), sl("b", 2.0, false), sl("c", 1.0, true)];
        let c = pr_curve(&scored).unwrap();
        let recalls: Vec<f64> = c.points.iter().map(|p| p.recall).collect();
        assert_eq!(recalls, vec![0.5, 0.5, 1.0]);
        assert_abs_diff_eq!(
            c.ap,
            average_precision(&scored).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn pr_curve_without_positives_errors() {
        let scored = vec![sl("a", 1.0, false), sl("b", 0.0, false)];
        assert!(pr_curve(&scored).is_err());
    }

    #[test]
    fn eleven_point_on_perfect_ranking() {
        let scored = vec![sl("a", 2.0, true), sl("b", 1.0, false)];
        assert_abs_diff_eq!(
            average_precision_with(&scored, ApVariant::ElevenPoint).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    fn pt(size: usize, ap: f64) -> CurvePoint {
        CurvePoint {
            subset_size: size,
            fraction: 0.0,
            test_ap: ap,
        }
    }

    #[test]
    fn peak_basic() {
        let r = peak_analysis(&[pt(10, 0.5), pt(20, 0.7), pt(30, 0.65)]).unwrap();
        assert_eq!(r.peak_ap, 0.7);
        assert_abs_diff_eq!(r.improvement, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(r.peak_fraction, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn peak_monotone_curve() {
        let r = peak_analysis(&[pt(10, 0.4), pt(20, 0.5), pt(30, 0.6)]).unwrap();
        assert_eq!(r.improvement, 0.0);
        assert_eq!(r.peak_fraction, 1.0);
    }

    #[test]
    fn peak_tie_prefers_smaller_subset() {
        let r = peak_analysis(&[pt(10, 0.7), pt(20, 0.7), pt(30, 0.6)]).unwrap();
        assert_eq!(r.peak_size, 10);
        assert_abs_diff_eq!(r.peak_fraction, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn peak_empty_errors() {
        assert!(matches!(peak_analysis(&[]), Err(Error::EmptyCurve)));
    }

    fn score_map(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn spearman_identical_rankings() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let scores = score_map(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        assert_abs_diff_eq!(
            spearman_rank_correlation(&ids, &scores).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn spearman_reversed_rankings() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let scores = score_map(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        assert_abs_diff_eq!(
            spearman_rank_correlation(&ids, &scores).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn spearman_hand_case() {
        // a-ranks [1,2,3]; the scores give b-ranks [2,1,3] → ρ = 0.5
        let ids: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let scores = score_map(&[("x", 5.0), ("y", 9.0), ("z", 1.0)]);
        assert_abs_diff_eq!(
            spearman_rank_correlation(&ids, &scores).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn spearman_missing_id_errors() {
        let ids: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let scores = score_map(&[("a", 1.0)]);
        assert!(matches!(
            spearman_rank_correlation(&ids, &scores),
            Err(Error::MissingScore(id)) if id == "b"
        ));
    }

    #[test]
    fn spearman_short_input_errors() {
        let ids: Vec<String> = vec!["a".into()];
        let scores = score_map(&[("a", 1.0)]);
        assert!(spearman_rank_correlation(&ids, &scores).is_err());
    }

    #[test]
    fn spearman_average_ranks_for_ties() {
        // scores (a,b,c,d) = (2,2,1,1): b-ranks (1.5, 1.5, 3.5, 3.5)
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let scores = score_map(&[("a", 2.0), ("b", 2.0), ("c", 1.0), ("d", 1.0)]);
        let rho = spearman_rank_correlation(&ids, &scores).unwrap();
        // Pearson of [1,2,3,4] with [1.5,1.5,3.5,3.5]
        assert_abs_diff_eq!(rho, 0.8944271909999159, epsilon = 1e-12);
    }
}
