//! Parallel Monte Carlo driver.
//!
//! Trials are embarrassingly parallel: trial t at every grid point uses
//! stream base + t, so results are a pure function of (spec, n, seeds,
//! t) and the report is assembled from trial-ordered slots. Reports are
//! therefore bitwise identical at any thread count.

use losstest_core::error::Result;
use losstest_core::rng::RngSpec;
use losstest_core::scenario::{
    assemble_report, check_experiment_args, run_trial, ExperimentReport, ScenarioSpec, TrialResult,
};
use rayon::prelude::*;

/// Environment variable capping worker threads; unset or unparsable
/// means rayon's default.
pub const THREADS_ENV: &str = "LOSSTEST_THREADS";

fn requested_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs trials in parallel on a dedicated pool and summarizes them,
/// producing the same report as the serial driver in core.
pub fn run_experiment_parallel(
    spec: &ScenarioSpec,
    n_grid: &[usize],
    trials: usize,
    seeds: &RngSpec,
) -> Result<ExperimentReport> {
    run_experiment_with_threads(spec, n_grid, trials, seeds, requested_threads())
}

/// As [`run_experiment_parallel`] with an explicit thread count;
/// `None` means rayon's default.
pub fn run_experiment_with_threads(
    spec: &ScenarioSpec,
    n_grid: &[usize],
    trials: usize,
    seeds: &RngSpec,
    threads: Option<usize>,
) -> Result<ExperimentReport> {
    check_experiment_args(n_grid, trials)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool construction");
    let results: Result<Vec<Vec<TrialResult>>> = pool.install(|| {
        n_grid
            .iter()
            .map(|&n| {
                (0..trials)
                    .into_par_iter()
                    .map(|t| run_trial(spec, n, t, seeds))
                    .collect()
            })
            .collect()
    });
    Ok(assemble_report(spec, n_grid, trials, seeds, &results?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use losstest_core::data::FeatureSubset;
    use losstest_core::scenario::{run_experiment, ScenarioFamily, ScenarioParams};

    fn spec() -> ScenarioSpec {
        ScenarioSpec::new(
            ScenarioFamily::ClsAltDeterministic,
            2,
            FeatureSubset::new(vec![0]).unwrap(),
            ScenarioParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn matches_serial_driver_at_any_thread_count() {
        let sc = spec();
        let seeds = RngSpec::new(2024, 3);
        let serial = run_experiment(&sc, &[8, 14], 6, &seeds).unwrap();
        for threads in [1, 2, 4] {
            let parallel =
                run_experiment_with_threads(&sc, &[8, 14], 6, &seeds, Some(threads)).unwrap();
            assert_eq!(serial, parallel, "threads = {threads}");
        }
    }

    #[test]
    fn validates_arguments() {
        let sc = spec();
        let seeds = RngSpec::new(1, 0);
        assert!(run_experiment_with_threads(&sc, &[], 5, &seeds, Some(1)).is_err());
        assert!(run_experiment_with_threads(&sc, &[10], 0, &seeds, Some(1)).is_err());
        assert!(run_experiment_with_threads(&sc, &[2], 5, &seeds, Some(1)).is_err());
    }
}
