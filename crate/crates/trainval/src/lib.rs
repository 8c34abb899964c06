//! Training-data valuation and subset selection for binary classifiers.
//!
//! Not every labeled example helps a classifier equally. This crate measures
//! the *training value* of each positive example — the average precision a
//! classifier achieves on the training set when trained with that single
//! positive plus all negatives — and uses the measure to rank examples and
//! greedily grow training subsets that can outperform training on the full
//! set.
//!
//! The main pieces:
//!
//! * [`dataset`] — immutable labeled datasets with stable ids, stratified
//!   splitting and subsampling.
//! * [`metrics`] — average precision, precision/recall curves, peak analysis
//!   of performance-vs-size curves, Spearman rank correlation.
//! * [`classifiers`] — LDA, exemplar LDA, linear SVM and kernel SVM with a
//!   histogram-intersection kernel, all deterministic.
//! * [`valuation`] — per-example training values and the ranking built from
//!   them.
//! * [`selection`] — orderings of the positives: greedy forward batch
//!   selection, random baselines, reversals, external scores.
//! * [`experiments`] — synthetic data generation, performance curves,
//!   dataset-size and cross-dataset studies, and a brute-force subset oracle.
//!
//! # Example
//!
//! ```
//! use trainval::classifiers::ClassifierConfig;
//! use trainval::experiments::{generate_synthetic, SyntheticSpec};
//! use trainval::valuation::rank_by_training_value;
//!
//! let spec = SyntheticSpec::separated(20, 80, 4, 2.0, 0.2, 7);
//! let data = generate_synthetic(&spec).unwrap();
//! let (ranking, report) = rank_by_training_value(&data, &ClassifierConfig::lda()).unwrap();
//! assert_eq!(ranking.ids.len(), 20);
//! assert!(report.values.values().all(|v| *v > 0.0 && *v <= 1.0));
//! ```
//!
//! All operations are deterministic: seeded generators are explicit, training
//! visits examples in ascending-id order regardless of dataset order, and the
//! data-parallel paths (enabled by the default `parallel` feature) collect
//! results in a fixed order so they are bit-identical to sequential runs.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod selection;
pub mod valuation;

pub use error::{Error, Result};
