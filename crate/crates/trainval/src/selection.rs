//! Orderings of the training positives: greedy forward batch selection,
//! random baselines, reversals, and external scores.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    evaluate_model, fit_negative_statistics_for, train_on_positive_subset, ClassifierConfig,
    ModelKind, NegativeStatistics,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::rng::SeededRng;
use crate::valuation::{rank_by_training_value_with, OrderMethod, Ranking};

/// A consecutive slice of a ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub index: usize,
    pub ids: Vec<String>,
}

/// What the greedy loop evaluated candidate models on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTarget {
    /// The entire training set.
    TrainSet,
    /// A stratified split carved from the input before ranking.
    ValidationSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAp {
    pub batch: usize,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub step: usize,
    pub chosen_batch: usize,
    pub chosen_ap: f64,
    /// AP of every candidate batch at this step, in batch-index order.
    pub candidates: Vec<CandidateAp>,
}

/// Complete record of one greedy run: the batches, every candidate
/// evaluation, and the chosen order. Replaying the trace reproduces every
/// recorded AP bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub format_version: u32,
    pub method: OrderMethod,
    pub config: ClassifierConfig,
    pub dataset_sha256: String,
    /// Seed of the internal generator that carved the validation split.
    pub seed: u64,
    pub batch_size: usize,
    pub eval_fraction: f64,
    pub eval_target: EvalTarget,
    pub batches: Vec<Batch>,
    pub steps: Vec<GreedyStep>,
    pub chosen_order: Vec<usize>,
    pub converged: bool,
}

impl SelectionTrace {
    /// Positive ids in the greedy order (chosen batches concatenated).
    pub fn ordered_ids(&self) -> Vec<String> {
        self.chosen_order
            .iter()
            .flat_map(|&b| self.batches[b].ids.iter().cloned())
            .collect()
    }

    pub fn to_ranking(&self) -> Ranking {
        Ranking {
            method: OrderMethod::Greedy,
            ids: self.ordered_ids(),
        }
    }
}

/// Slices a ranking into consecutive batches of `batch_size`; the last batch
/// may be smaller. Batch 0 holds the highest-ranked examples.
pub fn make_batches(ranking: &Ranking, batch_size: usize) -> Result<Vec<Batch>> {
    if batch_size < 1 {
        return Err(Error::OutOfRange {
            what: "batch size",
            range: "[1, inf)",
            got: batch_size as f64,
        });
    }
    if ranking.ids.is_empty() {
        return Err(Error::EmptyRanking);
    }
    Ok(ranking
        .ids
        .chunks(batch_size)
        .enumerate()
        .map(|(index, ids)| Batch {
            index,
            ids: ids.to_vec(),
        })
        .collect())
}

/// Default evaluation fraction for greedy: kernel SVMs overfit their
/// training set, so they get a held-out split.
pub fn default_eval_fraction(cfg: &ClassifierConfig) -> f64 {
    match cfg.kind {
        ModelKind::KernelSvm => 0.3,
        _ => 0.0,
    }
}

/// Greedy forward batch selection.
///
/// Ranks the positives by training value, slices them into batches, then
/// repeatedly trains on (selected ∪ candidate batch ∪ all negatives) and
/// adds the batch with the best AP on the evaluation target. With
/// `eval_fraction == 0` the evaluation target is the entire training set;
/// otherwise a stratified split is carved from `d` first and ranking,
/// training and selection all use only the remaining part. Ties resolve to
/// the lowest batch index. All batches are consumed; subset choice happens
/// later via peak analysis.
pub fn greedy_sort(
    d: &Dataset,
    cfg: &ClassifierConfig,
    batch_size: usize,
    eval_fraction: f64,
    rng: &mut SeededRng,
) -> Result<SelectionTrace> {
    greedy_sort_with(d, cfg, batch_size, eval_fraction, rng, Mode::default())
}

pub fn greedy_sort_with(
    d: &Dataset,
    cfg: &ClassifierConfig,
    batch_size: usize,
    eval_fraction: f64,
    rng: &mut SeededRng,
    mode: Mode,
) -> Result<SelectionTrace> {
    use rand::RngCore;
    let sub_seed = rng.next_u64();
    greedy_sort_seeded(d, cfg, batch_size, eval_fraction, sub_seed, mode)
}

/// Greedy with an explicit sub-seed; this is what trace verification
/// replays.
pub fn greedy_sort_seeded(
    d: &Dataset,
    cfg: &ClassifierConfig,
    batch_size: usize,
    eval_fraction: f64,
    seed: u64,
    mode: Mode,
) -> Result<SelectionTrace> {
    cfg.validate()?;
    let fingerprint = d.fingerprint();
    let mut split_rng = SeededRng::new(seed);
    let (train, eval, eval_target) = if eval_fraction > 0.0 {
        let (train, eval) = d.split(eval_fraction, &mut split_rng)?;
        (train, Some(eval), EvalTarget::ValidationSet)
    } else if eval_fraction == 0.0 {
        (d.clone(), None, EvalTarget::TrainSet)
    } else {
        return Err(Error::OutOfRange {
            what: "eval fraction",
            range: "[0, 1)",
            got: eval_fraction,
        });
    };
    let eval_set = eval.as_ref().unwrap_or(&train);

    let (ranking, value_report) = rank_by_training_value_with(&train, cfg, mode)?;
    let mut converged = value_report.converged;
    let batches = make_batches(&ranking, batch_size)?;

    let stats = match cfg.kind {
        ModelKind::Lda => Some(fit_negative_statistics_for(&train, cfg)?),
        _ => None,
    };

    let mut selected: Vec<String> = Vec::new();
    let mut remaining: Vec<usize> = (0..batches.len()).collect();
    let mut steps = Vec::with_capacity(batches.len());
    let mut chosen_order = Vec::with_capacity(batches.len());

    for step in 0..batches.len() {
        let evals = exec::map_ordered(mode, &remaining, |&bi| {
            candidate_ap(&train, eval_set, &selected, &batches[bi].ids, cfg, stats.as_ref())
        });
        let mut candidates = Vec::with_capacity(remaining.len());
        let mut best: Option<(usize, f64)> = None;
        for (&bi, outcome) in remaining.iter().zip(evals) {
            let (ap, ok) = outcome?;
            converged &= ok;
            candidates.push(CandidateAp { batch: bi, ap });
            // strict > keeps the lowest batch index on ties
            if best.map_or(true, |(_, b)| ap > b) {
                best = Some((bi, ap));
            }
        }
        let (chosen_batch, chosen_ap) = best.expect("remaining is nonempty");
        selected.extend(batches[chosen_batch].ids.iter().cloned());
        remaining.retain(|&b| b != chosen_batch);
        chosen_order.push(chosen_batch);
        steps.push(GreedyStep {
            step,
            chosen_batch,
            chosen_ap,
            candidates,
        });
    }

    Ok(SelectionTrace {
        format_version: 1,
        method: OrderMethod::Greedy,
        config: cfg.clone(),
        dataset_sha256: fingerprint,
        seed,
        batch_size,
        eval_fraction,
        eval_target,
        batches,
        steps,
        chosen_order,
        converged,
    })
}

fn candidate_ap(
    train: &Dataset,
    eval_set: &Dataset,
    selected: &[String],
    candidate: &[String],
    cfg: &ClassifierConfig,
    stats: Option<&NegativeStatistics>,
) -> Result<(f64, bool)> {
    let mut ids: Vec<String> = Vec::with_capacity(selected.len() + candidate.len());
    ids.extend_from_slice(selected);
    ids.extend_from_slice(candidate);
    let trained = train_on_positive_subset(train, &ids, cfg, stats)?;
    Ok((
        evaluate_model(&trained.model, eval_set)?,
        trained.meta.converged,
    ))
}

/// Verifies a recorded greedy trace against the dataset it came from: the
/// run is replayed with the trace's configuration and sub-seed and every
/// recorded value must reproduce exactly; step optimality and the tie rule
/// are checked on the recorded candidates as well.
pub fn verify_trace(d: &Dataset, trace: &SelectionTrace) -> Result<()> {
    if d.fingerprint() != trace.dataset_sha256 {
        return Err(Error::TraceMismatch(
            "dataset fingerprint differs from the trace".into(),
        ));
    }
    for step in &trace.steps {
        let best = step
            .candidates
            .iter()
            .fold(None::<&CandidateAp>, |acc, c| match acc {
                Some(b) if b.ap >= c.ap => Some(b),
                _ => Some(c),
            })
            .ok_or_else(|| Error::TraceMismatch(format!("step {} has no candidates", step.step)))?;
        if best.batch != step.chosen_batch || best.ap != step.chosen_ap {
            return Err(Error::TraceMismatch(format!(
                "step {}: chosen batch {} (ap {}) is not the tie-broken maximum \
                 (batch {}, ap {})",
                step.step, step.chosen_batch, step.chosen_ap, best.batch, best.ap
            )));
        }
    }
    let replay = greedy_sort_seeded(
        d,
        &trace.config,
        trace.batch_size,
        trace.eval_fraction,
        trace.seed,
        Mode::default(),
    )?;
    if replay.batches != trace.batches {
        return Err(Error::TraceMismatch("replayed batches differ".into()));
    }
    if replay.steps != trace.steps {
        return Err(Error::TraceMismatch(
            "replayed candidate APs differ".into(),
        ));
    }
    if replay.chosen_order != trace.chosen_order {
        return Err(Error::TraceMismatch("replayed chosen order differs".into()));
    }
    Ok(())
}

/// Uniform random permutation of the positive ids, deterministic per seed.
pub fn random_order(d: &Dataset, rng: &mut SeededRng) -> Result<Ranking> {
    let mut ids = d.positive_ids_sorted();
    if ids.is_empty() {
        return Err(Error::NoPositives);
    }
    ids.shuffle(rng);
    Ok(Ranking {
        method: OrderMethod::Random,
        ids,
    })
}

/// Exact reversal of a ranking.
pub fn reverse_order(ranking: &Ranking) -> Result<Ranking> {
    if ranking.ids.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let mut ids = ranking.ids.clone();
    ids.reverse();
    Ok(Ranking {
        method: OrderMethod::Reverse,
        ids,
    })
}

/// Orders the positives by descending external score, ties by ascending id.
pub fn external_order(d: &Dataset, scores: &HashMap<String, f64>) -> Result<Ranking> {
    let mut ids = d.positive_ids_sorted();
    if ids.is_empty() {
        return Err(Error::NoPositives);
    }
    for id in &ids {
        match scores.get(id) {
            Some(v) if v.is_finite() => {}
            Some(_) => return Err(Error::NonFiniteScore { id: id.clone() }),
            None => return Err(Error::MissingScore(id.clone())),
        }
    }
    ids.sort_by(|a, b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then_with(|| a.cmp(b))
    });
    Ok(Ranking {
        method: OrderMethod::External,
        ids,
    })
}
