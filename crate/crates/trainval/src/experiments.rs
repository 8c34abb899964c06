//! Experiment drivers: synthetic data, performance-versus-size curves,
//! dataset-size analysis, cross-dataset evaluation, and a brute-force
//! subset oracle.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    evaluate_model, fit_negative_statistics_for, train_on_positive_subset, ClassifierConfig,
    ModelKind,
};
use crate::dataset::{Dataset, Example, Label};
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::metrics::{peak_analysis, CurvePoint, PeakReport};
use crate::rng::SeededRng;
use crate::selection::{default_eval_fraction, greedy_sort_with, Batch};
use crate::valuation::{OrderMethod, Ranking};

/// Optional near-duplicate structure for synthetic positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancySpec {
    pub clusters: usize,
    pub cluster_size: usize,
    /// Spread of the duplicates around their sampled cluster center.
    pub stddev: f64,
}

/// Generator spec for two-Gaussian synthetic datasets with optional
/// contamination (positives drawn from the negative distribution but labeled
/// +1) and optional near-duplicate clusters.
///
/// Ids encode ground-truth roles: `pos_*` clean, `noise_*` contaminated,
/// `dup_*` near-duplicates, `neg_*` negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_pos: usize,
    pub n_neg: usize,
    pub dim: usize,
    pub pos_mean: Vec<f64>,
    pub neg_mean: Vec<f64>,
    /// Shared isotropic standard deviation of both classes.
    pub stddev: f64,
    /// Fraction of positives drawn from the negative distribution.
    pub contamination_rate: f64,
    pub redundancy: Option<RedundancySpec>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Spec with the class means `separation` apart along the first axis and
    /// unit standard deviation.
    pub fn separated(
        n_pos: usize,
        n_neg: usize,
        dim: usize,
        separation: f64,
        noise_rate: f64,
        seed: u64,
    ) -> Self {
        let mut pos_mean = vec![0.0; dim];
        if dim > 0 {
            pos_mean[0] = separation;
        }
        Self {
            n_pos,
            n_neg,
            dim,
            pos_mean,
            neg_mean: vec![0.0; dim],
            stddev: 1.0,
            contamination_rate: noise_rate,
            redundancy: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_pos == 0 || self.n_neg == 0 || self.dim == 0 {
            return Err(Error::OutOfRange {
                what: "synthetic counts and dimension",
                range: "[1, inf)",
                got: 0.0,
            });
        }
        if self.pos_mean.len() != self.dim {
            return Err(Error::LengthMismatch(self.pos_mean.len(), self.dim));
        }
        if self.neg_mean.len() != self.dim {
            return Err(Error::LengthMismatch(self.neg_mean.len(), self.dim));
        }
        if !(self.stddev > 0.0 && self.stddev.is_finite()) {
            return Err(Error::OutOfRange {
                what: "stddev",
                range: "(0, inf)",
                got: self.stddev,
            });
        }
        if !(0.0..1.0).contains(&self.contamination_rate) {
            return Err(Error::OutOfRange {
                what: "contamination rate",
                range: "[0, 1)",
                got: self.contamination_rate,
            });
        }
        if let Some(r) = &self.redundancy {
            if !(r.stddev >= 0.0 && r.stddev.is_finite()) {
                return Err(Error::OutOfRange {
                    what: "redundancy stddev",
                    range: "[0, inf)",
                    got: r.stddev,
                });
            }
            let n_noise = (self.contamination_rate * self.n_pos as f64).floor() as usize;
            if n_noise + r.clusters * r.cluster_size > self.n_pos {
                return Err(Error::OutOfRange {
                    what: "redundancy cluster total",
                    range: "noise + duplicates <= n_pos",
                    got: (r.clusters * r.cluster_size) as f64,
                });
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut SeededRng, mean: &[f64], stddev: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| m + stddev * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Draws a dataset from `spec`, deterministically per seed.
///
/// Generation order is fixed: clean positives, contaminated positives,
/// duplicate clusters (center first, then members), negatives.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let n_noise = (spec.contamination_rate * spec.n_pos as f64).floor() as usize;
    let n_dup = spec
        .redundancy
        .as_ref()
        .map_or(0, |r| r.clusters * r.cluster_size);
    let n_clean = spec.n_pos - n_noise - n_dup;

    let mut examples = Vec::with_capacity(spec.n_pos + spec.n_neg);
    for i in 0..n_clean {
        examples.push(Example::new(
            format!("pos_{i:05}"),
            Label::Positive,
            draw(&mut rng, &spec.pos_mean, spec.stddev),
        ));
    }
    for i in 0..n_noise {
        examples.push(Example::new(
            format!("noise_{i:05}"),
            Label::Positive,
            draw(&mut rng, &spec.neg_mean, spec.stddev),
        ));
    }
    if let Some(r) = &spec.redundancy {
        for c in 0..r.clusters {
            let center = draw(&mut rng, &spec.pos_mean, spec.stddev);
            for i in 0..r.cluster_size {
                examples.push(Example::new(
                    format!("dup_{c:02}_{i:03}"),
                    Label::Positive,
                    draw(&mut rng, &center, r.stddev),
                ));
            }
        }
    }
    for i in 0..spec.n_neg {
        examples.push(Example::new(
            format!("neg_{i:05}"),
            Label::Negative,
            draw(&mut rng, &spec.neg_mean, spec.stddev),
        ));
    }
    Dataset::new(examples)
}

/// Test AP as a function of how many ordered positives were used for
/// training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub format_version: u32,
    pub method: OrderMethod,
    pub points: Vec<CurvePoint>,
    /// Number of runs averaged into the points (1 unless RANDOM).
    pub runs: u32,
    pub config: ClassifierConfig,
    pub converged: bool,
}

impl PerformanceCurve {
    pub fn peak_report(&self) -> Result<PeakReport> {
        peak_analysis(&self.points)
    }
}

fn check_order_covers(train: &Dataset, order: &Ranking) -> Result<()> {
    let mut seen = HashSet::with_capacity(order.ids.len());
    for id in &order.ids {
        match train.get(id) {
            None => {
                return Err(Error::OrderMismatch(format!(
                    "id {id:?} is not in the training set"
                )))
            }
            Some(ex) if !ex.label.is_positive() => {
                return Err(Error::OrderMismatch(format!(
                    "id {id:?} is not a positive example"
                )))
            }
            Some(_) => {}
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::OrderMismatch(format!("id {id:?} appears twice")));
        }
    }
    if order.ids.len() != train.n_positives() {
        return Err(Error::OrderMismatch(format!(
            "ordering covers {} of {} positives",
            order.ids.len(),
            train.n_positives()
        )));
    }
    Ok(())
}

fn prefix_sizes(n_pos: usize, step: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (1..=n_pos / step).map(|i| i * step).collect();
    if ks.last() != Some(&n_pos) {
        ks.push(n_pos);
    }
    ks
}

/// Trains on growing prefixes of `order` (plus all negatives of `train`)
/// and records test AP per prefix size. The final point always uses the
/// full positive set.
pub fn performance_curve(
    order: &Ranking,
    train: &Dataset,
    test: &Dataset,
    cfg: &ClassifierConfig,
    step: usize,
) -> Result<PerformanceCurve> {
    performance_curve_with(order, train, test, cfg, step, Mode::default())
}

pub fn performance_curve_with(
    order: &Ranking,
    train: &Dataset,
    test: &Dataset,
    cfg: &ClassifierConfig,
    step: usize,
    mode: Mode,
) -> Result<PerformanceCurve> {
    cfg.validate()?;
    if step < 1 {
        return Err(Error::OutOfRange {
            what: "curve step",
            range: "[1, inf)",
            got: step as f64,
        });
    }
    if test.n_positives() == 0 {
        return Err(Error::NoPositives);
    }
    if test.dim() != train.dim() {
        return Err(Error::LengthMismatch(test.dim(), train.dim()));
    }
    check_order_covers(train, order)?;
    let stats = match cfg.kind {
        ModelKind::Lda => Some(fit_negative_statistics_for(train, cfg)?),
        _ => None,
    };
    let n_pos = train.n_positives();
    let ks = prefix_sizes(n_pos, step);
    let results = exec::map_ordered(mode, &ks, |&k| {
        let trained = train_on_positive_subset(train, &order.ids[..k], cfg, stats.as_ref())?;
        Ok::<(f64, bool), Error>((
            evaluate_model(&trained.model, test)?,
            trained.meta.converged,
        ))
    });
    let mut points = Vec::with_capacity(ks.len());
    let mut converged = true;
    for (&k, r) in ks.iter().zip(results) {
        let (ap, ok) = r?;
        converged &= ok;
        points.push(CurvePoint {
            subset_size: k,
            fraction: k as f64 / n_pos as f64,
            test_ap: ap,
        });
    }
    Ok(PerformanceCurve {
        format_version: 1,
        method: order.method,
        points,
        runs: 1,
        config: cfg.clone(),
        converged,
    })
}

/// Pointwise mean of `n_runs` random-ordering curves, using child seeds
/// `0..n_runs` of `rng` and averaging in seed order.
pub fn averaged_random_curve(
    train: &Dataset,
    test: &Dataset,
    cfg: &ClassifierConfig,
    step: usize,
    n_runs: u32,
    rng: &SeededRng,
) -> Result<PerformanceCurve> {
    averaged_random_curve_with(train, test, cfg, step, n_runs, rng, Mode::default())
}

pub fn averaged_random_curve_with(
    train: &Dataset,
    test: &Dataset,
    cfg: &ClassifierConfig,
    step: usize,
    n_runs: u32,
    rng: &SeededRng,
    mode: Mode,
) -> Result<PerformanceCurve> {
    if n_runs < 1 {
        return Err(Error::OutOfRange {
            what: "random runs",
            range: "[1, inf)",
            got: n_runs as f64,
        });
    }
    let mut acc: Option<PerformanceCurve> = None;
    for run in 0..n_runs {
        let mut child = rng.child(run as u64);
        let order = crate::selection::random_order(train, &mut child)?;
        let curve = performance_curve_with(&order, train, test, cfg, step, mode)?;
        acc = Some(match acc {
            None => curve,
            Some(mut total) => {
                for (t, p) in total.points.iter_mut().zip(&curve.points) {
                    t.test_ap += p.test_ap;
                }
                total.converged &= curve.converged;
                total
            }
        });
    }
    let mut curve = acc.expect("n_runs >= 1");
    for p in curve.points.iter_mut() {
        p.test_ap /= n_runs as f64;
    }
    curve.runs = n_runs;
    curve.method = OrderMethod::Random;
    Ok(curve)
}

/// One fraction's worth of dataset-size analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeAnalysis {
    pub fraction: f64,
    pub curve: PerformanceCurve,
    pub peak: PeakReport,
}

/// Subsamples `train` at each fraction, runs greedy sorting on the
/// subsample, and evaluates the greedy ordering against the fixed test set.
///
/// Fraction `i` uses child streams `2i` (subsample) and `2i + 1` (greedy)
/// of `rng`.
pub fn dataset_size_analysis(
    train: &Dataset,
    test: &Dataset,
    cfg: &ClassifierConfig,
    fractions: &[f64],
    batch_size: usize,
    rng: &SeededRng,
) -> Result<Vec<SizeAnalysis>> {
    let mode = Mode::default();
    let mut out = Vec::with_capacity(fractions.len());
    for (i, &fraction) in fractions.iter().enumerate() {
        let mut sub_rng = rng.child(2 * i as u64);
        let sub = train.subsample(fraction, &mut sub_rng)?;
        let mut greedy_rng = rng.child(2 * i as u64 + 1);
        let trace = greedy_sort_with(
            &sub,
            cfg,
            batch_size,
            default_eval_fraction(cfg),
            &mut greedy_rng,
            mode,
        )?;
        let curve = performance_curve_with(&trace.to_ranking(), &sub, test, cfg, batch_size, mode)?;
        let peak = curve.peak_report()?;
        out.push(SizeAnalysis {
            fraction,
            curve,
            peak,
        });
    }
    Ok(out)
}

/// Evaluates one ordering against two test sets, training each prefix model
/// once and scoring it on both.
pub fn cross_dataset_eval(
    order: &Ranking,
    train: &Dataset,
    test_a: &Dataset,
    test_b: &Dataset,
    cfg: &ClassifierConfig,
    step: usize,
) -> Result<(PerformanceCurve, PerformanceCurve)> {
    cross_dataset_eval_with(order, train, test_a, test_b, cfg, step, Mode::default())
}

pub fn cross_dataset_eval_with(
    order: &Ranking,
    train: &Dataset,
    test_a: &Dataset,
    test_b: &Dataset,
    cfg: &ClassifierConfig,
    step: usize,
    mode: Mode,
) -> Result<(PerformanceCurve, PerformanceCurve)> {
    cfg.validate()?;
    if step < 1 {
        return Err(Error::OutOfRange {
            what: "curve step",
            range: "[1, inf)",
            got: step as f64,
        });
    }
    for test in [test_a, test_b] {
        if test.dim() != train.dim() {
            return Err(Error::LengthMismatch(test.dim(), train.dim()));
        }
        if test.n_positives() == 0 {
            return Err(Error::NoPositives);
        }
    }
    check_order_covers(train, order)?;
    let stats = match cfg.kind {
        ModelKind::Lda => Some(fit_negative_statistics_for(train, cfg)?),
        _ => None,
    };
    let n_pos = train.n_positives();
    let ks = prefix_sizes(n_pos, step);
    let results = exec::map_ordered(mode, &ks, |&k| {
        let trained = train_on_positive_subset(train, &order.ids[..k], cfg, stats.as_ref())?;
        let ap_a = evaluate_model(&trained.model, test_a)?;
        let ap_b = evaluate_model(&trained.model, test_b)?;
        Ok::<(f64, f64, bool), Error>((ap_a, ap_b, trained.meta.converged))
    });
    let mut points_a = Vec::with_capacity(ks.len());
    let mut points_b = Vec::with_capacity(ks.len());
    let mut converged = true;
    for (&k, r) in ks.iter().zip(results) {
        let (ap_a, ap_b, ok) = r?;
        converged &= ok;
        let fraction = k as f64 / n_pos as f64;
        points_a.push(CurvePoint {
            subset_size: k,
            fraction,
            test_ap: ap_a,
        });
        points_b.push(CurvePoint {
            subset_size: k,
            fraction,
            test_ap: ap_b,
        });
    }
    let mk = |points| PerformanceCurve {
        format_version: 1,
        method: order.method,
        points,
        runs: 1,
        config: cfg.clone(),
        converged,
    };
    Ok((mk(points_a), mk(points_b)))
}

/// Cap on the number of batches the exhaustive oracle accepts (2¹² subsets).
pub const ORACLE_BATCH_CAP: usize = 12;

/// Best batch union found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub format_version: u32,
    pub batch_indices: Vec<usize>,
    pub ids: Vec<String>,
    pub ap: f64,
    pub candidates_evaluated: usize,
}

/// Evaluates every nonempty union of batches (always training with all
/// negatives of `train`) and returns the one with the best AP on `eval`.
/// Ties prefer fewer batches, then the lexicographically smallest index
/// set.
pub fn exhaustive_best_subset(
    train: &Dataset,
    eval: &Dataset,
    cfg: &ClassifierConfig,
    batches: &[Batch],
) -> Result<OracleResult> {
    exhaustive_best_subset_with(train, eval, cfg, batches, Mode::default())
}

pub fn exhaustive_best_subset_with(
    train: &Dataset,
    eval: &Dataset,
    cfg: &ClassifierConfig,
    batches: &[Batch],
    mode: Mode,
) -> Result<OracleResult> {
    cfg.validate()?;
    if batches.is_empty() {
        return Err(Error::EmptyRanking);
    }
    if batches.len() > ORACLE_BATCH_CAP {
        return Err(Error::TooManyBatches {
            got: batches.len(),
            cap: ORACLE_BATCH_CAP,
        });
    }
    let stats = match cfg.kind {
        ModelKind::Lda => Some(fit_negative_statistics_for(train, cfg)?),
        _ => None,
    };
    let n_masks = (1usize << batches.len()) - 1;
    let evals = exec::map_range(mode, n_masks, |m| {
        let mask = m + 1;
        let mut ids = Vec::new();
        for (b, batch) in batches.iter().enumerate() {
            if mask & (1 << b) != 0 {
                ids.extend(batch.ids.iter().cloned());
            }
        }
        let trained = train_on_positive_subset(train, &ids, cfg, stats.as_ref())?;
        Ok::<f64, Error>(evaluate_model(&trained.model, eval)?)
    });

    let mut best: Option<(f64, usize, Vec<usize>, usize)> = None; // ap, count, indices, mask
    for (m, r) in evals.into_iter().enumerate() {
        let ap = r?;
        let mask = m + 1;
        let indices: Vec<usize> = (0..batches.len()).filter(|b| mask & (1 << b) != 0).collect();
        let count = indices.len();
        let better = match &best {
            None => true,
            Some((bap, bcount, bindices, _)) => {
                ap > *bap
                    || (ap == *bap && count < *bcount)
                    || (ap == *bap && count == *bcount && indices < *bindices)
            }
        };
        if better {
            best = Some((ap, count, indices, mask));
        }
    }
    let (ap, _, batch_indices, mask) = best.expect("at least one candidate");
    let mut ids = Vec::new();
    for (b, batch) in batches.iter().enumerate() {
        if mask & (1 << b) != 0 {
            ids.extend(batch.ids.iter().cloned());
        }
    }
    Ok(OracleResult {
        format_version: 1,
        batch_indices,
        ids,
        ap,
        candidates_evaluated: n_masks,
    })
}
