//! Synthetic scenarios with known truth, plus a Monte Carlo harness.
//!
//! Each family draws X uniformly on [0,1]^d and attaches labels whose
//! conditional mean either depends only on the candidate subset (null
//! families) or provably does not (alternative families, which carry the
//! closed-form limit of the excess statistic). The harness repeats
//! generate → test pipelines over a sample-size grid and tallies
//! rejection frequencies with Wilson intervals.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{sgn, Dataset, FeatureSubset, LabelKind};
use crate::error::{Error, Result};
use crate::hypothesis::{run_test, Decision, TestConfig};
use crate::rng::RngSpec;

/// Noise truncation range: ε is a standard normal conditioned on
/// |ε| ≤ 10, which keeps every conditional moment of Y finite.
pub const NOISE_TRUNCATION: f64 = 10.0;

/// z for a 95% Wilson interval.
const WILSON_Z: f64 = 1.959963984540054;

/// The four built-in data generating processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScenarioFamily {
    /// ±1 labels with P(Y=1|X) = (1 + β·cos(2π x_{s₁}))/2; the subset is
    /// lossless by construction.
    ClsNullSmooth,
    /// Y = sgn(x_j − 1/2) for the first feature j outside the subset;
    /// the subset misses all of the signal.
    ClsAltDeterministic,
    /// Y = sin(2π x_{s₁}) + τ·ε with truncated normal ε.
    RegNullSmooth,
    /// Y = x_{s₁} + w·x_j + τ·ε with j the first feature outside the
    /// subset.
    RegAltLinear,
}

impl ScenarioFamily {
    pub fn task(self) -> LabelKind {
        match self {
            ScenarioFamily::ClsNullSmooth | ScenarioFamily::ClsAltDeterministic => LabelKind::Classification,
            ScenarioFamily::RegNullSmooth | ScenarioFamily::RegAltLinear => LabelKind::Regression,
        }
    }

    /// True when the subset is lossless under this family.
    pub fn is_null(self) -> bool {
        matches!(self, ScenarioFamily::ClsNullSmooth | ScenarioFamily::RegNullSmooth)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioFamily::ClsNullSmooth => "cls_null_smooth",
            ScenarioFamily::ClsAltDeterministic => "cls_alt_deterministic",
            ScenarioFamily::RegNullSmooth => "reg_null_smooth",
            ScenarioFamily::RegAltLinear => "reg_alt_linear",
        }
    }
}

/// Family parameters; unused entries are simply ignored by families that
/// do not reference them.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioParams {
    /// Signal amplitude of the smooth classification null, in [0, 1).
    pub beta: f64,
    /// Noise level of the regression families, positive.
    pub tau: f64,
    /// Weight of the out-of-subset feature in the linear alternative,
    /// nonzero.
    pub w: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams { beta: 0.5, tau: 0.3, w: 3.0 }
    }
}

/// A fully specified data generating process.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSpec {
    pub family: ScenarioFamily,
    pub d: usize,
    pub subset: FeatureSubset,
    pub params: ScenarioParams,
    /// Limit of the excess statistic under the alternative families
    /// (1 for the deterministic classification alternative, w²/12 for
    /// the linear one); absent under the nulls.
    pub analytic_limit: Option<f64>,
}

impl ScenarioSpec {
    pub fn new(family: ScenarioFamily, d: usize, subset: FeatureSubset, params: ScenarioParams) -> Result<Self> {
        subset.check_dim(d)?;
        if !family.is_null() && subset.len() == d {
            return Err(Error::Scenario(format!(
                "{} needs a feature outside the subset, but the subset covers all {d}",
                family.as_str()
            )));
        }
        match family {
            ScenarioFamily::ClsNullSmooth => {
                if !(0.0..1.0).contains(&params.beta) {
                    return Err(Error::Scenario(format!("beta must lie in [0, 1), got {}", params.beta)));
                }
            }
            ScenarioFamily::RegNullSmooth | ScenarioFamily::RegAltLinear => {
                if !(params.tau > 0.0 && params.tau.is_finite()) {
                    return Err(Error::Scenario(format!("tau must be positive, got {}", params.tau)));
                }
                if family == ScenarioFamily::RegAltLinear && !(params.w != 0.0 && params.w.is_finite()) {
                    return Err(Error::Scenario(format!("w must be nonzero, got {}", params.w)));
                }
            }
            ScenarioFamily::ClsAltDeterministic => {}
        }
        let analytic_limit = match family {
            ScenarioFamily::ClsAltDeterministic => Some(1.0),
            ScenarioFamily::RegAltLinear => Some(params.w * params.w / 12.0),
            _ => None,
        };
        Ok(ScenarioSpec { family, d, subset, params, analytic_limit })
    }

    /// First subset feature, the one null signals run through.
    fn s1(&self) -> usize {
        self.subset.indices()[0]
    }

    /// First feature outside the subset; exists for alternative families
    /// by the constructor check.
    pub fn excluded_feature(&self) -> Option<usize> {
        (0..self.d).find(|j| !self.subset.contains(*j))
    }

    /// Conditional mean of Y given the full feature vector.
    pub fn regression_function(&self, row: &[f64]) -> f64 {
        match self.family {
            ScenarioFamily::ClsNullSmooth => {
                self.params.beta * libm::cos(2.0 * core::f64::consts::PI * row[self.s1()])
            }
            ScenarioFamily::ClsAltDeterministic => {
                sgn(row[self.excluded_feature().expect("validated")] - 0.5)
            }
            ScenarioFamily::RegNullSmooth => libm::sin(2.0 * core::f64::consts::PI * row[self.s1()]),
            ScenarioFamily::RegAltLinear => {
                row[self.s1()] + self.params.w * row[self.excluded_feature().expect("validated")]
            }
        }
    }

    /// Conditional mean of Y given only the subset coordinates, written
    /// as a function of the full row; out-of-subset features are
    /// integrated out against their uniform law.
    pub fn subset_regression_function(&self, row: &[f64]) -> f64 {
        match self.family {
            // null signals already read only subset coordinates
            ScenarioFamily::ClsNullSmooth | ScenarioFamily::RegNullSmooth => self.regression_function(row),
            // E sgn(x_j − 1/2) = 0 for x_j uniform and independent of X_S
            ScenarioFamily::ClsAltDeterministic => 0.0,
            // E x_j = 1/2
            ScenarioFamily::RegAltLinear => row[self.s1()] + self.params.w * 0.5,
        }
    }
}

fn truncated_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if libm::fabs(z) <= NOISE_TRUNCATION {
            return z;
        }
    }
}

/// Draws total_n i.i.d. samples from the scenario. Per row, the d
/// feature coordinates are drawn first, then whatever randomness the
/// label needs (one uniform for the smooth classification null, one
/// truncated normal for the regression families, nothing for the
/// deterministic alternative).
pub fn generate(spec: &ScenarioSpec, total_n: usize, rng: &RngSpec) -> Result<Dataset> {
    if total_n < 4 {
        return Err(Error::TooFewSamples { n: total_n, min: 4 });
    }
    let mut r = rng.rng();
    let mut features = Vec::with_capacity(total_n * spec.d);
    let mut labels = Vec::with_capacity(total_n);
    let mut row = Vec::with_capacity(spec.d);
    for _ in 0..total_n {
        row.clear();
        for _ in 0..spec.d {
            row.push(r.random::<f64>());
        }
        let y = match spec.family {
            ScenarioFamily::ClsNullSmooth => {
                let p = (1.0 + spec.regression_function(&row)) / 2.0;
                if r.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
            ScenarioFamily::ClsAltDeterministic => spec.regression_function(&row),
            ScenarioFamily::RegNullSmooth | ScenarioFamily::RegAltLinear => {
                spec.regression_function(&row) + spec.params.tau * truncated_normal(&mut r)
            }
        };
        features.extend_from_slice(&row);
        labels.push(y);
    }
    Dataset::new(features, spec.d, labels, spec.family.task())
}

/// Outcome of a single generate → test trial.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialResult {
    pub rejected: bool,
    pub statistic: f64,
    pub threshold: f64,
}

/// Runs one trial at per-half size n. The trial's stream is the base
/// stream advanced by the trial index, so trials are reproducible in
/// isolation and independent of scheduling.
pub fn run_trial(spec: &ScenarioSpec, half_n: usize, trial: usize, seeds: &RngSpec) -> Result<TrialResult> {
    let trial_rng = RngSpec::new(seeds.master_seed, seeds.stream_id.wrapping_add(trial as u64));
    let data = generate(spec, 2 * half_n, &trial_rng)?;
    let config = TestConfig::new(spec.subset.clone(), spec.family.task());
    let outcome = run_test(&data, &config)?;
    Ok(TrialResult {
        rejected: outcome.decision == Decision::RejectNull,
        statistic: outcome.statistic,
        threshold: outcome.threshold,
    })
}

/// Monte Carlo summary over a sample-size grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub scenario: ScenarioSpec,
    /// Per-half sample sizes; each trial generates 2n rows.
    pub n_grid: Vec<usize>,
    pub trials: usize,
    /// Reject counts per grid point; rate · trials recoverable exactly.
    pub rejections: Vec<usize>,
    pub rejection_rate: Vec<f64>,
    pub wilson_ci: Vec<(f64, f64)>,
    pub mean_statistic: Vec<f64>,
    pub mean_threshold: Vec<f64>,
    pub seeds: RngSpec,
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = WILSON_Z * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    // at p ∈ {0, 1} the matching endpoint is exactly p; spare it the rounding
    let lo = if successes == 0 { 0.0 } else { ((center - spread) / denom).max(0.0) };
    let hi = if successes == trials { 1.0 } else { ((center + spread) / denom).min(1.0) };
    (lo, hi)
}

/// Assembles per-trial results (outer index: grid, inner: trial) into a
/// report; shared by the serial driver here and parallel drivers built
/// on [`run_trial`], which must pass results in trial order.
pub fn assemble_report(
    spec: &ScenarioSpec,
    n_grid: &[usize],
    trials: usize,
    seeds: &RngSpec,
    results: &[Vec<TrialResult>],
) -> ExperimentReport {
    let mut rejections = Vec::with_capacity(n_grid.len());
    let mut rejection_rate = Vec::with_capacity(n_grid.len());
    let mut wilson_ci = Vec::with_capacity(n_grid.len());
    let mut mean_statistic = Vec::with_capacity(n_grid.len());
    let mut mean_threshold = Vec::with_capacity(n_grid.len());
    for per_trial in results {
        let count = per_trial.iter().filter(|t| t.rejected).count();
        let mut stat_sum = 0.0;
        let mut thr_sum = 0.0;
        for t in per_trial {
            stat_sum += t.statistic;
            thr_sum += t.threshold;
        }
        rejections.push(count);
        rejection_rate.push(count as f64 / trials as f64);
        wilson_ci.push(wilson_interval(count, trials));
        mean_statistic.push(stat_sum / trials as f64);
        mean_threshold.push(thr_sum / trials as f64);
    }
    ExperimentReport {
        scenario: spec.clone(),
        n_grid: n_grid.to_vec(),
        trials,
        rejections,
        rejection_rate,
        wilson_ci,
        mean_statistic,
        mean_threshold,
        seeds: *seeds,
    }
}

/// Shared precondition check for experiment drivers: at least one
/// trial, a nonempty grid, every per-half size at least 4.
pub fn check_experiment_args(n_grid: &[usize], trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    if n_grid.is_empty() {
        return Err(Error::Domain("sample size grid must be nonempty".into()));
    }
    if let Some(&n) = n_grid.iter().find(|&&n| n < 4) {
        return Err(Error::TooFewSamples { n, min: 4 });
    }
    Ok(())
}

/// Runs trials × grid pipelines serially and summarizes them. Trial t
/// always uses stream seeds.stream_id + t, at every grid point, so grid
/// points share common random numbers and reports are reproducible
/// trial by trial.
pub fn run_experiment(
    spec: &ScenarioSpec,
    n_grid: &[usize],
    trials: usize,
    seeds: &RngSpec,
) -> Result<ExperimentReport> {
    check_experiment_args(n_grid, trials)?;
    let mut results = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let mut per_trial = Vec::with_capacity(trials);
        for t in 0..trials {
            per_trial.push(run_trial(spec, n, t, seeds)?);
        }
        results.push(per_trial);
    }
    Ok(assemble_report(spec, n_grid, trials, seeds, &results))
}

/// One plot-ready row of a power curve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerRow {
    pub n: usize,
    pub threshold: f64,
    pub mean_statistic: f64,
    pub rejection_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ExperimentReport {
    pub fn power_rows(&self) -> Vec<PowerRow> {
        (0..self.n_grid.len())
            .map(|i| PowerRow {
                n: self.n_grid[i],
                threshold: self.mean_threshold[i],
                mean_statistic: self.mean_statistic[i],
                rejection_rate: self.rejection_rate[i],
                ci_lo: self.wilson_ci[i].0,
                ci_hi: self.wilson_ci[i].1,
            })
            .collect()
    }
}

/// Convenience wrapper: run the experiment and emit plot-ready rows.
pub fn power_curve(
    spec: &ScenarioSpec,
    n_grid: &[usize],
    trials: usize,
    seeds: &RngSpec,
) -> Result<Vec<PowerRow>> {
    Ok(run_experiment(spec, n_grid, trials, seeds)?.power_rows())
}
