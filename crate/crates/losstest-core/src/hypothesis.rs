//! Nearest-neighbor tests for whether a feature subset is lossless.
//!
//! The null hypothesis says the subvector X_S carries everything the full
//! vector X knows about Y: the minimum achievable risk is the same whether
//! a predictor sees X or only X_S. The statistics below estimate the
//! excess risk of the restriction directly, by comparing k-NN estimates
//! built on the full features against k-NN estimates built on the
//! projected features, both fit on the train half and averaged over the
//! eval half of a single split.
//!
//! Classification (labels ±1):
//!
//! ```text
//! T = (1/n) Σ_i  Y'_i · sgn(m(X'_i)) − |m̂(X̂'_i)|
//! ```
//!
//! Regression:
//!
//! ```text
//! T = (1/n) Σ_i  Y'_i · m(X'_i) − m̂(X̂'_i)²
//! ```
//!
//! where m is the k-NN estimate on all d coordinates and m̂ the k-NN
//! estimate on the subset coordinates. Under the null both averages
//! estimate the same functional, so T concentrates near (or below) zero;
//! under the alternative T converges to a positive excess-risk gap. The
//! test accepts the null when T ≤ a_n with the dimension-free threshold
//! a_n = ln(n)/√n. An older 1-NN label-difference statistic with its
//! dimension-dependent threshold ln(n)(n^{−1/2} + n^{−1/d}) is included
//! as a baseline.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{sgn, split, Dataset, FeatureSubset, LabelKind, SplitPair};
use crate::error::{Error, Result};
use crate::knn::{batch_neighbors, mean_label, NeighborList, TiePolicy};
use crate::knn::{augment, query_aux, train_aux};
use crate::rng::RngSpec;

// ---------------------------------------------------------------------------
// k and threshold schedules
// ---------------------------------------------------------------------------

/// Neighbor count for the classification statistic: ⌊√(ln n)⌋, at least 1.
pub fn k_classification(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2 for the k schedule, got {n}")));
    }
    let k = libm::floor(libm::sqrt(libm::log(n as f64))) as usize;
    Ok(k.max(1))
}

/// Neighbor count for the regression statistic: ⌊ln n⌋, at least 1.
pub fn k_regression(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2 for the k schedule, got {n}")));
    }
    let k = libm::floor(libm::log(n as f64)) as usize;
    Ok(k.max(1))
}

/// Acceptance threshold family for the excess-risk statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ThresholdVariant {
    /// ln(n)/√n.
    Standard,
    /// (ln n)²/√n; larger, for use when stronger guarantees on the
    /// acceptance error are wanted.
    Strong,
}

/// Which statistic drives the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StatisticVariant {
    /// The k-NN excess-risk statistic with the dimension-free threshold.
    Excess,
    /// The 1-NN label-difference statistic with the dimension-dependent
    /// threshold.
    Baseline1nn,
}

/// Dimension-free threshold a_n for the excess-risk statistics.
pub fn threshold(n: usize, variant: ThresholdVariant) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2 for a threshold, got {n}")));
    }
    let ln_n = libm::log(n as f64);
    let root_n = libm::sqrt(n as f64);
    Ok(match variant {
        ThresholdVariant::Standard => ln_n / root_n,
        ThresholdVariant::Strong => ln_n * ln_n / root_n,
    })
}

/// Threshold for the 1-NN baseline: ln(n)·(n^{−1/2} + n^{−1/d}).
pub fn baseline_threshold(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2 for a threshold, got {n}")));
    }
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let nf = n as f64;
    Ok(libm::log(nf) * (libm::pow(nf, -0.5) + libm::pow(nf, -1.0 / d as f64)))
}

// ---------------------------------------------------------------------------
// statistics
// ---------------------------------------------------------------------------

/// k-NN estimates for every eval point in the full and projected spaces.
///
/// In jitter mode, one auxiliary coordinate per train row and one per
/// eval row are drawn from the policy's seed and appended to BOTH the
/// full and the projected features, so each sample carries a single
/// shared extra coordinate, and the search falls back to the index rule
/// only on residual exact ties.
fn paired_estimates(
    pair: &SplitPair,
    subset: &FeatureSubset,
    k: usize,
    policy: &TiePolicy,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    subset.check_dim(pair.train().d())?;
    let train = pair.train();
    let eval = pair.eval();
    let train_proj = train.project(subset)?;
    let eval_proj = eval.project(subset)?;

    let (full_lists, proj_lists) = match policy {
        TiePolicy::IndexOrder => {
            let full = batch_neighbors(train.features(), train.d(), eval.features(), k, &TiePolicy::IndexOrder)?;
            let proj = batch_neighbors(
                train_proj.features(),
                train_proj.d(),
                eval_proj.features(),
                k,
                &TiePolicy::IndexOrder,
            )?;
            (full, proj)
        }
        TiePolicy::Jitter(seed) => {
            let t_aux = train_aux(seed, train.n());
            let e_aux: Vec<f64> = eval
                .features()
                .chunks(eval.d())
                .map(|row| query_aux(seed, row))
                .collect();
            let full_train = augment(train.features(), train.d(), &t_aux);
            let proj_train = augment(train_proj.features(), train_proj.d(), &t_aux);
            let full_eval = augment(eval.features(), eval.d(), &e_aux);
            let proj_eval = augment(eval_proj.features(), eval_proj.d(), &e_aux);
            let full = batch_neighbors(&full_train, train.d() + 1, &full_eval, k, &TiePolicy::IndexOrder)?;
            let proj = batch_neighbors(
                &proj_train,
                train_proj.d() + 1,
                &proj_eval,
                k,
                &TiePolicy::IndexOrder,
            )?;
            (full, proj)
        }
    };

    let ties = count_ties(&full_lists) + count_ties(&proj_lists);
    let full_est: Vec<f64> = full_lists.iter().map(|l| mean_label(train.labels(), &l.indices)).collect();
    let proj_est: Vec<f64> = proj_lists.iter().map(|l| mean_label(train.labels(), &l.indices)).collect();
    Ok((full_est, proj_est, ties))
}

fn count_ties(lists: &[NeighborList]) -> usize {
    lists.iter().map(|l| l.ties).sum()
}

fn require_task(pair: &SplitPair, task: LabelKind) -> Result<()> {
    if pair.train().label_kind() != task {
        return Err(Error::TaskMismatch {
            config: task.as_str(),
            data: pair.train().label_kind().as_str(),
        });
    }
    Ok(())
}

pub(crate) fn classification_statistic_with_ties(
    pair: &SplitPair,
    subset: &FeatureSubset,
    k: usize,
    policy: &TiePolicy,
) -> Result<(f64, usize)> {
    require_task(pair, LabelKind::Classification)?;
    check_k(k, pair.half_n())?;
    let (full_est, proj_est, ties) = paired_estimates(pair, subset, k, policy)?;
    let labels = pair.eval().labels();
    let mut sum = 0.0;
    for i in 0..labels.len() {
        sum += labels[i] * sgn(full_est[i]) - libm::fabs(proj_est[i]);
    }
    Ok((sum / labels.len() as f64, ties))
}

pub(crate) fn regression_statistic_with_ties(
    pair: &SplitPair,
    subset: &FeatureSubset,
    k: usize,
    policy: &TiePolicy,
) -> Result<(f64, usize)> {
    require_task(pair, LabelKind::Regression)?;
    check_k(k, pair.half_n())?;
    let (full_est, proj_est, ties) = paired_estimates(pair, subset, k, policy)?;
    let labels = pair.eval().labels();
    let mut sum = 0.0;
    for i in 0..labels.len() {
        sum += labels[i] * full_est[i] - proj_est[i] * proj_est[i];
    }
    Ok((sum / labels.len() as f64, ties))
}

pub(crate) fn baseline_statistic_with_ties(
    pair: &SplitPair,
    subset: &FeatureSubset,
    policy: &TiePolicy,
) -> Result<(f64, usize)> {
    let (full_est, proj_est, ties) = paired_estimates(pair, subset, 1, policy)?;
    let labels = pair.eval().labels();
    let mut sum = 0.0;
    for i in 0..labels.len() {
        // with k = 1 the estimate is the nearest neighbor's label itself
        sum += labels[i] * (full_est[i] - proj_est[i]);
    }
    Ok((sum / labels.len() as f64, ties))
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if k > n {
        return Err(Error::InsufficientNeighbors { k, n });
    }
    Ok(())
}

/// Classification excess-risk statistic over a prepared split.
pub fn classification_statistic(
    pair: &SplitPair,
    subset: &FeatureSubset,
    k: usize,
    policy: &TiePolicy,
) -> Result<f64> {
    classification_statistic_with_ties(pair, subset, k, policy).map(|(t, _)| t)
}

/// Regression excess-risk statistic over a prepared split.
pub fn regression_statistic(
    pair: &SplitPair,
    subset: &FeatureSubset,
    k: usize,
    policy: &TiePolicy,
) -> Result<f64> {
    regression_statistic_with_ties(pair, subset, k, policy).map(|(t, _)| t)
}

/// 1-NN baseline statistic over a prepared split. Works for either label
/// kind; with S the full set it is exactly zero.
pub fn baseline_1nn_statistic(pair: &SplitPair, subset: &FeatureSubset, policy: &TiePolicy) -> Result<f64> {
    baseline_statistic_with_ties(pair, subset, policy).map(|(t, _)| t)
}

// ---------------------------------------------------------------------------
// decisions
// ---------------------------------------------------------------------------

/// Outcome of the accept/reject rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Decision {
    AcceptNull,
    RejectNull,
}

/// Full configuration of one test run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestConfig {
    /// Candidate lossless subset S.
    pub subset: FeatureSubset,
    pub task: LabelKind,
    pub tie_policy: TiePolicy,
    /// Overrides the k schedule; applies to the excess statistic only.
    pub k_override: Option<usize>,
    pub threshold_variant: ThresholdVariant,
    pub statistic_variant: StatisticVariant,
    /// Shuffle the rows with this seed before splitting; deterministic
    /// first-half/second-half split when absent.
    pub split_shuffle: Option<RngSpec>,
}

impl TestConfig {
    /// Defaults: index-order ties, scheduled k, standard threshold,
    /// excess statistic, deterministic split.
    pub fn new(subset: FeatureSubset, task: LabelKind) -> Self {
        TestConfig {
            subset,
            task,
            tie_policy: TiePolicy::IndexOrder,
            k_override: None,
            threshold_variant: ThresholdVariant::Standard,
            statistic_variant: StatisticVariant::Excess,
            split_shuffle: None,
        }
    }
}

/// Everything needed to reproduce a [`TestOutcome`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeMeta {
    pub subset: Vec<usize>,
    pub task: LabelKind,
    pub statistic_variant: StatisticVariant,
    pub threshold_variant: ThresholdVariant,
    pub tie_policy: TiePolicy,
    pub split_shuffle: Option<RngSpec>,
    /// 1 when an odd input row was dropped by the split, else 0.
    pub rows_dropped: usize,
}

/// Result of one test run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub k_used: usize,
    pub n_eval: usize,
    pub decision: Decision,
    /// Exact query–train distance ties hit by the index rule, summed over
    /// both search spaces.
    pub tie_count: usize,
    pub meta: OutcomeMeta,
}

/// Splits the data, computes the configured statistic and threshold, and
/// decides. Accepts the null exactly when statistic ≤ threshold.
pub fn run_test(data: &Dataset, config: &TestConfig) -> Result<TestOutcome> {
    if data.label_kind() != config.task {
        return Err(Error::TaskMismatch {
            config: config.task.as_str(),
            data: data.label_kind().as_str(),
        });
    }
    config.subset.check_dim(data.d())?;
    let pair = split(data, config.split_shuffle.as_ref())?;
    let n = pair.half_n();

    let (statistic, threshold_value, k_used, tie_count) = match config.statistic_variant {
        StatisticVariant::Excess => {
            let k = match config.k_override {
                Some(k) => {
                    check_k(k, n)?;
                    k
                }
                None => match config.task {
                    LabelKind::Classification => k_classification(n)?,
                    LabelKind::Regression => k_regression(n)?,
                },
            };
            let (t, ties) = match config.task {
                LabelKind::Classification => {
                    classification_statistic_with_ties(&pair, &config.subset, k, &config.tie_policy)?
                }
                LabelKind::Regression => {
                    regression_statistic_with_ties(&pair, &config.subset, k, &config.tie_policy)?
                }
            };
            (t, threshold(n, config.threshold_variant)?, k, ties)
        }
        StatisticVariant::Baseline1nn => {
            let (t, ties) = baseline_statistic_with_ties(&pair, &config.subset, &config.tie_policy)?;
            (t, baseline_threshold(n, data.d())?, 1, ties)
        }
    };

    let decision = if statistic <= threshold_value {
        Decision::AcceptNull
    } else {
        Decision::RejectNull
    };
    Ok(TestOutcome {
        statistic,
        threshold: threshold_value,
        k_used,
        n_eval: n,
        decision,
        tie_count,
        meta: OutcomeMeta {
            subset: config.subset.indices().to_vec(),
            task: config.task,
            statistic_variant: config.statistic_variant,
            threshold_variant: config.threshold_variant,
            tie_policy: config.tie_policy,
            split_shuffle: config.split_shuffle,
            rows_dropped: data.n() % 2,
        },
    })
}

/// Runs the test once per feature with S = all features except that one,
/// reusing the same deterministic split and policy for every run.
pub fn loco_scan(data: &Dataset, task: LabelKind, policy: &TiePolicy) -> Result<Vec<(usize, TestOutcome)>> {
    if data.d() < 2 {
        return Err(Error::Domain("leave-one-covariate-out needs at least 2 features".into()));
    }
    let mut out = Vec::with_capacity(data.d());
    for j in 0..data.d() {
        let mut config = TestConfig::new(FeatureSubset::excluding(data.d(), j)?, task);
        config.tie_policy = *policy;
        out.push((j, run_test(data, &config)?));
    }
    Ok(out)
}
