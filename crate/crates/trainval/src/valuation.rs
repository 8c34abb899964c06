//! Training value of positive examples and the ranking built from it.
//!
//! The training value of a positive example is the average precision on the
//! full training set of a classifier trained with that example and all the
//! negatives. The evaluation set deliberately includes the exemplar itself;
//! there is no leave-one-out correction.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    evaluate_model, train_exemplar_lda, train_on_positive_subset, ClassifierConfig, Model,
    ModelKind, NegativeStatistics,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::{self, Mode};

/// How an ordering of the positives was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMethod {
    Value,
    Greedy,
    Random,
    Reverse,
    External,
}

/// An ordering of the positive example ids of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: OrderMethod,
    pub ids: Vec<String>,
}

/// Per-positive training values plus the context needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationReport {
    pub format_version: u32,
    /// Training value per positive id, keyed in ascending id order.
    pub values: BTreeMap<String, f64>,
    pub config: ClassifierConfig,
    pub dataset_sha256: String,
    /// False when any exemplar training hit its iteration cap.
    pub converged: bool,
    /// Wall-clock seconds per exemplar, aligned with `values` iteration
    /// order. Not serialized: timings belong in run manifests, not in
    /// deterministic payloads.
    #[serde(skip)]
    pub elapsed_seconds: Vec<f64>,
}

/// Shares the per-dataset work (negative statistics) across many
/// single-exemplar trainings.
pub struct Valuator<'a> {
    dataset: &'a Dataset,
    config: &'a ClassifierConfig,
    stats: Option<NegativeStatistics>,
}

impl<'a> Valuator<'a> {
    pub fn new(dataset: &'a Dataset, config: &'a ClassifierConfig) -> Result<Self> {
        config.validate()?;
        if dataset.n_positives() == 0 {
            return Err(Error::NoPositives);
        }
        let stats = match config.kind {
            ModelKind::Lda => Some(crate::classifiers::fit_negative_statistics_for(
                dataset, config,
            )?),
            _ => None,
        };
        Ok(Self {
            dataset,
            config,
            stats,
        })
    }

    /// Training value of the positive example `id`; also reports whether the
    /// exemplar training converged.
    pub fn value(&self, id: &str) -> Result<(f64, bool)> {
        let ex = self
            .dataset
            .get(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))?;
        if !ex.label.is_positive() {
            return Err(Error::NotPositive(id.to_string()));
        }
        match &self.stats {
            Some(stats) => {
                let model = Model::Linear(train_exemplar_lda(ex, stats)?);
                Ok((evaluate_model(&model, self.dataset)?, true))
            }
            None => {
                let trained = train_on_positive_subset(
                    self.dataset,
                    std::slice::from_ref(&ex.id),
                    self.config,
                    None,
                )?;
                Ok((
                    evaluate_model(&trained.model, self.dataset)?,
                    trained.meta.converged,
                ))
            }
        }
    }
}

/// Training value of a single positive example.
pub fn training_value(d: &Dataset, id: &str, cfg: &ClassifierConfig) -> Result<f64> {
    Ok(Valuator::new(d, cfg)?.value(id)?.0)
}

/// Values every positive example and returns the descending-value ranking
/// (ties by ascending id) together with the full report.
pub fn rank_by_training_value(
    d: &Dataset,
    cfg: &ClassifierConfig,
) -> Result<(Ranking, ValuationReport)> {
    rank_by_training_value_with(d, cfg, Mode::default())
}

pub fn rank_by_training_value_with(
    d: &Dataset,
    cfg: &ClassifierConfig,
    mode: Mode,
) -> Result<(Ranking, ValuationReport)> {
    let valuator = Valuator::new(d, cfg)?;
    let ids = d.positive_ids_sorted();
    let results = exec::map_ordered(mode, &ids, |id| {
        let start = Instant::now();
        let out = valuator.value(id);
        (out, start.elapsed().as_secs_f64())
    });

    let mut values = BTreeMap::new();
    let mut elapsed_seconds = Vec::with_capacity(ids.len());
    let mut converged = true;
    for (id, (out, secs)) in ids.iter().zip(results) {
        let (value, ok) = out?;
        values.insert(id.clone(), value);
        elapsed_seconds.push(secs);
        converged &= ok;
    }

    let mut ordered = ids;
    ordered.sort_by(|a, b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("AP values are finite")
            .then_with(|| a.cmp(b))
    });

    Ok((
        Ranking {
            method: OrderMethod::Value,
            ids: ordered,
        },
        ValuationReport {
            format_version: 1,
            values,
            config: cfg.clone(),
            dataset_sha256: d.fingerprint(),
            converged,
            elapsed_seconds,
        },
    ))
}
