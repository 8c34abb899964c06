//! Labeled datasets with stable identifiers.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Binary class label, strictly −1 or +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Label::Positive)
    }

    /// Accepts exactly `1`, `+1` or `-1`; any other encoding is rejected.
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "1" | "+1" => Some(Label::Positive),
            "-1" => Some(Label::Negative),
            _ => None,
        }
    }
}

/// One labeled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub label: Label,
    pub features: Vec<f64>,
}

impl Example {
    pub fn new(id: impl Into<String>, label: Label, features: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            label,
            features,
        }
    }
}

/// An immutable ordered set of examples with a uniform feature dimension.
///
/// Iteration order is stable and equal to construction order. Ids are unique.
/// Whether both classes are present is a per-operation precondition, not a
/// constructor invariant, so single-class subsets (e.g. an exemplar plus all
/// negatives) are representable.
#[derive(Debug, Clone)]
pub struct Dataset {
    examples: Vec<Example>,
    dim: usize,
    by_id: HashMap<String, usize>,
    positives: Vec<usize>,
    negatives: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from a nonempty list of examples.
    ///
    /// Rejects an empty list, a duplicate id, or a feature vector whose
    /// length differs from the first example's.
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = examples[0].features.len();
        Self::with_dim(examples, dim)
    }

    /// As [`Dataset::new`] but with an explicit dimension; the list may be
    /// empty. Used for degenerate products of splits.
    pub fn with_dim(examples: Vec<Example>, dim: usize) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(examples.len());
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for (i, ex) in examples.iter().enumerate() {
            if ex.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    id: ex.id.clone(),
                    expected: dim,
                    got: ex.features.len(),
                });
            }
            if by_id.insert(ex.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(ex.id.clone()));
            }
            match ex.label {
                Label::Positive => positives.push(i),
                Label::Negative => negatives.push(i),
            }
        }
        Ok(Self {
            examples,
            dim,
            by_id,
            positives,
            negatives,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.by_id.get(id).map(|&i| &self.examples[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    /// Positive examples in dataset order.
    pub fn positives(&self) -> impl Iterator<Item = &Example> {
        self.positives.iter().map(|&i| &self.examples[i])
    }

    /// Negative examples in dataset order.
    pub fn negatives(&self) -> impl Iterator<Item = &Example> {
        self.negatives.iter().map(|&i| &self.examples[i])
    }

    pub fn n_positives(&self) -> usize {
        self.positives.len()
    }

    pub fn n_negatives(&self) -> usize {
        self.negatives.len()
    }

    /// Ids of the positive examples in ascending id order. This is the
    /// canonical order used by trainers and rankings, so results do not
    /// depend on dataset order.
    pub fn positive_ids_sorted(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.positives().map(|e| e.id.clone()).collect();
        ids.sort_unstable();
        ids
    }

    /// SHA-256 over the dataset content (dimension, then id, label and raw
    /// feature bits of every example in order), hex-encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for ex in &self.examples {
            h.update((ex.id.len() as u64).to_le_bytes());
            h.update(ex.id.as_bytes());
            h.update([match ex.label {
                Label::Positive => 1u8,
                Label::Negative => 0u8,
            }]);
            for f in &ex.features {
                h.update(f.to_le_bytes());
            }
        }
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Stratified split into `(train, eval)` parts.
    ///
    /// Positives and negatives are sampled independently so both parts keep
    /// the class ratio to within rounding; kept examples preserve dataset
    /// order. `eval_fraction == 0` returns `(self.clone(), empty)`. Errors
    /// if either part would lose a class.
    pub fn split(&self, eval_fraction: f64, rng: &mut SeededRng) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&eval_fraction) {
            return Err(Error::OutOfRange {
                what: "eval fraction",
                range: "[0, 1)",
                got: eval_fraction,
            });
        }
        if eval_fraction == 0.0 {
            return Ok((self.clone(), Dataset::with_dim(Vec::new(), self.dim)?));
        }
        let n_pos_eval = round_half_up(eval_fraction * self.positives.len() as f64);
        let n_neg_eval = round_half_up(eval_fraction * self.negatives.len() as f64);
        let feasible = n_pos_eval >= 1
            && n_neg_eval >= 1
            && n_pos_eval < self.positives.len()
            && n_neg_eval < self.negatives.len();
        if !feasible {
            return Err(Error::InfeasibleSplit {
                fraction: eval_fraction,
            });
        }
        let pos_eval = sample_indices(&self.positives, n_pos_eval, rng);
        let neg_eval = sample_indices(&self.negatives, n_neg_eval, rng);
        let mut in_eval = vec![false; self.examples.len()];
        for &i in pos_eval.iter().chain(neg_eval.iter()) {
            in_eval[i] = true;
        }
        let (mut train, mut eval) = (Vec::new(), Vec::new());
        for (i, ex) in self.examples.iter().enumerate() {
            if in_eval[i] {
                eval.push(ex.clone());
            } else {
                train.push(ex.clone());
            }
        }
        Ok((
            Dataset::with_dim(train, self.dim)?,
            Dataset::with_dim(eval, self.dim)?,
        ))
    }

    /// Stratified subsample without replacement; kept examples preserve
    /// dataset order. `fraction == 1` returns the dataset unchanged. Errors
    /// if either class would be lost.
    pub fn subsample(&self, fraction: f64, rng: &mut SeededRng) -> Result<Dataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::OutOfRange {
                what: "subsample fraction",
                range: "(0, 1]",
                got: fraction,
            });
        }
        if fraction == 1.0 {
            return Ok(self.clone());
        }
        let n_pos = round_half_up(fraction * self.positives.len() as f64);
        let n_neg = round_half_up(fraction * self.negatives.len() as f64);
        if n_pos < 1 || n_neg < 1 {
            return Err(Error::InfeasibleSubsample { fraction });
        }
        let pos_keep = sample_indices(&self.positives, n_pos, rng);
        let neg_keep = sample_indices(&self.negatives, n_neg, rng);
        let mut keep: Vec<usize> = pos_keep.into_iter().chain(neg_keep).collect();
        keep.sort_unstable();
        let examples = keep.iter().map(|&i| self.examples[i].clone()).collect();
        Dataset::with_dim(examples, self.dim)
    }
}

/// An ordered selection of example ids within a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSubset {
    pub ids: Vec<String>,
}

impl ExampleSubset {
    /// Validates that every id resolves in `d` and none repeats.
    pub fn new(d: &Dataset, ids: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for id in &ids {
            if !d.contains(id) {
                return Err(Error::UnknownId(id.clone()));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { ids })
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Uniform sample of `k` entries from `pool` without replacement, returned
/// in the pool's original order.
fn sample_indices(pool: &[usize], k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let chosen = rand::seq::index::sample(rng, pool.len(), k);
    let mut picks: Vec<usize> = chosen.into_iter().collect();
    picks.sort_unstable();
    picks.into_iter().map(|p| pool[p]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, label: Label, features: &[f64]) -> Example {
        Example::new(id, label, features.to_vec())
    }

    fn balanced(n_pos: usize, n_neg: usize) -> Dataset {
        let mut v = Vec::new();
        for i in 0..n_pos {
            v.push(ex(&format!("p{i:03}"), Label::Positive, &[i as f64, 1.0]));
        }
        for i in 0..n_neg {
            v.push(ex(&format!("n{i:03}"), Label::Negative, &[i as f64, -1.0]));
        }
        Dataset::new(v).unwrap()
    }

    #[test]
    fn construction_sets_dim_and_order() {
        let d = Dataset::new(vec![
            ex("a", Label::Positive, &[1.0, 2.0, 3.0]),
            ex("b", Label::Negative, &[4.0, 5.0, 6.0]),
        ])
        .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 3);
        assert_eq!(d.examples()[0].id, "a");
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = Dataset::new(vec![
            ex("a", Label::Positive, &[1.0, 2.0, 3.0]),
            ex("b", Label::Negative, &[4.0, 5.0, 6.0, 7.0]),
        ])
        .unwrap_err();
        match err {
            Error::DimensionMismatch { id, expected, got } => {
                assert_eq!(id, "b");
                assert_eq!((expected, got), (3, 4));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_id() {
        let err = Dataset::new(vec![
            ex("a", Label::Positive, &[1.0]),
            ex("a", Label::Negative, &[2.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn label_parsing_is_strict() {
        assert_eq!(Label::parse("1"), Some(Label::Positive));
        assert_eq!(Label::parse("+1"), Some(Label::Positive));
        assert_eq!(Label::parse("-1"), Some(Label::Negative));
        assert_eq!(Label::parse("0"), None);
        assert_eq!(Label::parse("2"), None);
        assert_eq!(Label::parse("1.0"), None);
    }

    #[test]
    fn round_trip_reconstruction() {
        let d = balanced(3, 5);
        let d2 = Dataset::new(d.examples().to_vec()).unwrap();
        assert_eq!(d.fingerprint(), d2.fingerprint());
    }

    #[test]
    fn split_zero_fraction_is_identity() {
        let d = balanced(4, 4);
        let mut rng = SeededRng::new(0);
        let (train, eval) = d.split(0.0, &mut rng).unwrap();
        assert_eq!(train.fingerprint(), d.fingerprint());
        assert!(eval.is_empty());
    }

    #[test]
    fn split_is_exactly_stratified() {
        let d = balanced(10, 10);
        let mut rng = SeededRng::new(3);
        let (train, eval) = d.split(0.5, &mut rng).unwrap();
        assert_eq!(train.n_positives(), 5);
        assert_eq!(train.n_negatives(), 5);
        assert_eq!(eval.n_positives(), 5);
        assert_eq!(eval.n_negatives(), 5);
    }

    #[test]
    fn split_rejects_unsplittable_class() {
        let d = balanced(1, 10);
        let mut rng = SeededRng::new(3);
        assert!(matches!(
            d.split(0.5, &mut rng),
            Err(Error::InfeasibleSplit { .. })
        ));
    }

    #[test]
    fn split_parts_partition_the_input() {
        let d = balanced(7, 13);
        let mut rng = SeededRng::new(11);
        let (train, eval) = d.split(0.3, &mut rng).unwrap();
        let mut ids: Vec<&str> = train
            .examples()
            .iter()
            .chain(eval.examples())
            .map(|e| e.id.as_str())
            .collect();
        ids.sort_unstable();
        let mut expect: Vec<&str> = d.examples().iter().map(|e| e.id.as_str()).collect();
        expect.sort_unstable();
        assert_eq!(ids, expect);
        assert!(eval.examples().iter().all(|e| !train.contains(&e.id)));
    }

    #[test]
    fn subsample_identity_fraction() {
        let d = balanced(5, 5);
        let mut rng = SeededRng::new(0);
        let s = d.subsample(1.0, &mut rng).unwrap();
        assert_eq!(s.fingerprint(), d.fingerprint());
    }

    #[test]
    fn subsample_quarter_is_stratified() {
        let d = balanced(100, 100);
        let mut rng = SeededRng::new(9);
        let s = d.subsample(0.25, &mut rng).unwrap();
        assert_eq!(s.n_positives(), 25);
        assert_eq!(s.n_negatives(), 25);
    }

    #[test]
    fn subsample_rejects_class_loss() {
        let d = balanced(2, 100);
        let mut rng = SeededRng::new(9);
        assert!(matches!(
            d.subsample(0.01, &mut rng),
            Err(Error::InfeasibleSubsample { .. })
        ));
    }

    #[test]
    fn subsample_is_deterministic_per_seed() {
        let d = balanced(40, 60);
        let a = d.subsample(0.5, &mut SeededRng::new(21)).unwrap();
        let b = d.subsample(0.5, &mut SeededRng::new(21)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = d.subsample(0.5, &mut SeededRng::new(22)).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn subset_validates_ids() {
        let d = balanced(2, 2);
        assert!(ExampleSubset::new(&d, vec!["p000".into(), "n001".into()]).is_ok());
        assert!(matches!(
            ExampleSubset::new(&d, vec!["zz".into()]),
            Err(Error::UnknownId(_))
        ));
        assert!(matches!(
            ExampleSubset::new(&d, vec!["p000".into(), "p000".into()]),
            Err(Error::DuplicateId(_))
        ));
    }
}
