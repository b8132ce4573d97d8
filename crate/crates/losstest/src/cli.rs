//! Command-line interface.
//!
//! Exit codes separate statistical outcomes from failures: 0 accepts the
//! null, 3 rejects it, 1 is a usage error (bad flags, before any data is
//! touched), 2 is a data error (unreadable or invalid input, or settings
//! the dataset cannot support).
//!
//! The master seed drives two derived streams: stream 0 shuffles rows
//! before the train/eval split, stream 1 feeds jittered tie breaking
//! when --ties jitter is chosen.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use losstest_core::data::{FeatureSubset, LabelKind};
use losstest_core::hypothesis::{run_test, Decision, StatisticVariant, TestConfig, ThresholdVariant};
use losstest_core::knn::TiePolicy;
use losstest_core::mad::mad_validity_map;
use losstest_core::rng::RngSpec;
use losstest_core::scenario::{ScenarioFamily, ScenarioParams, ScenarioSpec};

use crate::csvio::{ingest_csv, CsvError, IngestOptions, LabelCoding, LabelColumn};
use crate::report::{
    to_json, write_output, LocoEntry, ManifestConfig, RunManifest, SimulateConfig, SimulateReport,
    TestReport,
};
use crate::sim::run_experiment_parallel;

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_REJECT: i32 = 3;

const SPLIT_STREAM: u64 = 0;
const JITTER_STREAM: u64 = 1;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Options(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn data_err(e: losstest_core::Error) -> CliError {
    CliError::Data(e.to_string())
}

fn usage_err(e: losstest_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write output: {e}"))
}

#[derive(Parser)]
#[command(
    name = "losstest",
    version,
    about = "Distribution-free nearest-neighbor tests for lossless feature selection"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether a feature subset is lossless on CSV data
    Test(TestArgs),
    /// Scan all leave-one-covariate-out subsets of a CSV dataset
    Loco(LocoArgs),
    /// Tabulate the exact mean-absolute-deviation oracle and its bounds
    Mad(MadArgs),
    /// Run Monte Carlo rejection-rate experiments on synthetic scenarios
    Simulate(SimArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Classify,
    Regress,
}

impl TaskArg {
    fn kind(self) -> LabelKind {
        match self {
            TaskArg::Classify => LabelKind::Classification,
            TaskArg::Regress => LabelKind::Regression,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TiesArg {
    /// Break exact distance ties by smaller training index
    Index,
    /// Append a seeded auxiliary coordinate, falling back to the index rule
    Jitter,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    /// k-NN excess-risk statistic, dimension-free threshold
    Excess,
    /// 1-NN label-difference statistic, dimension-dependent threshold
    Baseline,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ThresholdArg {
    /// ln(n)/sqrt(n)
    Standard,
    /// ln(n)^2/sqrt(n)
    Strong,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodingArg {
    /// Labels already in {-1, 1}
    Pm1,
    /// Labels in {0, 1}, remapped to {-1, +1}
    ZeroOne,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    #[value(name = "cls_null_smooth")]
    ClsNullSmooth,
    #[value(name = "cls_alt_deterministic")]
    ClsAltDeterministic,
    #[value(name = "reg_null_smooth")]
    RegNullSmooth,
    #[value(name = "reg_alt_linear")]
    RegAltLinear,
}

impl ScenarioArg {
    fn family(self) -> ScenarioFamily {
        match self {
            ScenarioArg::ClsNullSmooth => ScenarioFamily::ClsNullSmooth,
            ScenarioArg::ClsAltDeterministic => ScenarioFamily::ClsAltDeterministic,
            ScenarioArg::RegNullSmooth => ScenarioFamily::RegNullSmooth,
            ScenarioArg::RegAltLinear => ScenarioFamily::RegAltLinear,
        }
    }
}

/// Flags shared by the data-driven commands.
#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row, numeric features and one label column
    #[arg(long)]
    data: PathBuf,
    /// Prediction task the labels encode
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Master seed for the split shuffle and jittered tie breaking
    #[arg(long)]
    seed: u64,
    /// Neighbor count, overriding the sample-size schedule
    #[arg(long)]
    k: Option<usize>,
    /// Distance tie handling
    #[arg(long, value_enum, default_value_t = TiesArg::Index)]
    ties: TiesArg,
    /// Statistic driving the decision
    #[arg(long, value_enum, default_value_t = VariantArg::Excess)]
    variant: VariantArg,
    /// Acceptance threshold family
    #[arg(long, value_enum, default_value_t = ThresholdArg::Standard)]
    threshold: ThresholdArg,
    /// Label column name or 0-based index (default: last column)
    #[arg(long)]
    label_column: Option<String>,
    /// Label encoding for classification data
    #[arg(long, value_enum, default_value_t = CodingArg::Pm1)]
    label_coding: CodingArg,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// 0-based feature indices of the candidate subset, comma separated
    #[arg(long)]
    subset: String,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct LocoArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct MadArgs {
    /// Largest n to scan, at most 1000
    #[arg(long)]
    n_max: usize,
    /// Comma-separated means strictly inside (-1, 1)
    #[arg(long)]
    a_grid: String,
    /// Write the CSV table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Comma-separated per-half sample sizes (each trial draws 2n rows)
    #[arg(long)]
    n_grid: String,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Feature dimension
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Candidate subset handed to the test
    #[arg(long, default_value = "0")]
    subset: String,
    /// Amplitude of the smooth classification signal, in [0, 1)
    #[arg(long)]
    beta: Option<f64>,
    /// Regression noise level, positive
    #[arg(long)]
    tau: Option<f64>,
    /// Out-of-subset weight of the linear alternative, nonzero
    #[arg(long)]
    w: Option<f64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a plot-ready CSV power curve here
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point over explicit arguments.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_ACCEPT,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Loco(args) => cmd_loco(args),
        Command::Mad(args) => cmd_mad(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn parse_subset(raw: &str) -> Result<FeatureSubset, CliError> {
    let mut indices = parse_list::<usize>(raw, "--subset")?;
    indices.sort_unstable();
    for w in indices.windows(2) {
        if w[0] == w[1] {
            return Err(CliError::Usage(format!("duplicate feature index {} in --subset", w[0])));
        }
    }
    FeatureSubset::new(indices).map_err(usage_err)
}

fn parse_list<T: std::str::FromStr>(raw: &str, flag: &str) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        out.push(part.parse().map_err(|_| {
            CliError::Usage(format!("{flag}: '{part}' is not a valid entry"))
        })?);
    }
    Ok(out)
}

fn ingest(args: &DataArgs) -> Result<losstest_core::data::Dataset, CliError> {
    let label_column = args.label_column.as_ref().map(|raw| match raw.parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(raw.clone()),
    });
    let opts = IngestOptions {
        label_column,
        label_coding: match args.label_coding {
            CodingArg::Pm1 => LabelCoding::Pm1,
            CodingArg::ZeroOne => LabelCoding::ZeroOne,
        },
        task: args.task.kind(),
    };
    Ok(ingest_csv(&args.data, &opts)?)
}

fn build_config(subset: FeatureSubset, args: &DataArgs) -> TestConfig {
    TestConfig {
        subset,
        task: args.task.kind(),
        tie_policy: match args.ties {
            TiesArg::Index => TiePolicy::IndexOrder,
            TiesArg::Jitter => TiePolicy::Jitter(RngSpec::new(args.seed, JITTER_STREAM)),
        },
        k_override: args.k,
        threshold_variant: match args.threshold {
            ThresholdArg::Standard => ThresholdVariant::Standard,
            ThresholdArg::Strong => ThresholdVariant::Strong,
        },
        statistic_variant: match args.variant {
            VariantArg::Excess => StatisticVariant::Excess,
            VariantArg::Baseline => StatisticVariant::Baseline1nn,
        },
        split_shuffle: Some(RngSpec::new(args.seed, SPLIT_STREAM)),
    }
}

fn check_k_flag(args: &DataArgs) -> Result<(), CliError> {
    if args.k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    Ok(())
}

fn decision_code(decision: Decision) -> i32 {
    match decision {
        Decision::AcceptNull => EXIT_ACCEPT,
        Decision::RejectNull => EXIT_REJECT,
    }
}

fn cmd_test(args: TestArgs) -> Result<i32, CliError> {
    let subset = parse_subset(&args.subset)?;
    check_k_flag(&args.data)?;
    let dataset = ingest(&args.data)?;
    let config = build_config(subset, &args.data);
    let outcome = run_test(&dataset, &config).map_err(data_err)?;
    let manifest = RunManifest::new(
        "test",
        Some(&args.data.data),
        ManifestConfig::Test(config),
        args.data.seed,
    );
    let report = TestReport::from_outcome(&outcome, manifest);
    write_output(args.data.out.as_deref(), &to_json(&report)).map_err(io_err)?;
    Ok(decision_code(outcome.decision))
}

fn cmd_loco(args: LocoArgs) -> Result<i32, CliError> {
    check_k_flag(&args.data)?;
    let dataset = ingest(&args.data)?;
    if dataset.d() < 2 {
        return Err(CliError::Data(
            "a leave-one-covariate-out scan needs at least two feature columns".into(),
        ));
    }
    let mut entries = Vec::with_capacity(dataset.d());
    let mut any_reject = false;
    for feature in 0..dataset.d() {
        let subset = FeatureSubset::excluding(dataset.d(), feature).map_err(data_err)?;
        let config = build_config(subset, &args.data);
        let outcome = run_test(&dataset, &config).map_err(data_err)?;
        any_reject |= outcome.decision == Decision::RejectNull;
        let manifest = RunManifest::new(
            "loco",
            Some(&args.data.data),
            ManifestConfig::Test(config),
            args.data.seed,
        );
        entries.push(LocoEntry { feature, report: TestReport::from_outcome(&outcome, manifest) });
    }
    write_output(args.data.out.as_deref(), &to_json(&entries)).map_err(io_err)?;
    // a rejected drop-one subset means that feature is indispensable
    Ok(if any_reject { EXIT_REJECT } else { EXIT_ACCEPT })
}

fn cmd_mad(args: MadArgs) -> Result<i32, CliError> {
    let grid = parse_list::<f64>(&args.a_grid, "--a-grid")?;
    let rows = mad_validity_map(args.n_max, &grid).map_err(usage_err)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Data(format!("cannot serialize table: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("cannot serialize table: {e}")))?;
    let content = String::from_utf8(bytes).expect("CSV output is UTF-8");
    write_output(args.out.as_deref(), &content).map_err(io_err)?;
    Ok(EXIT_ACCEPT)
}

fn cmd_simulate(args: SimArgs) -> Result<i32, CliError> {
    let subset = parse_subset(&args.subset)?;
    let mut params = ScenarioParams::default();
    if let Some(beta) = args.beta {
        params.beta = beta;
    }
    if let Some(tau) = args.tau {
        params.tau = tau;
    }
    if let Some(w) = args.w {
        params.w = w;
    }
    let spec = ScenarioSpec::new(args.scenario.family(), args.d, subset, params).map_err(usage_err)?;
    let n_grid = parse_list::<usize>(&args.n_grid, "--n-grid")?;
    let seeds = RngSpec::new(args.seed, 0);
    // everything here is flag-derived, so failures are usage errors
    let experiment = run_experiment_parallel(&spec, &n_grid, args.trials, &seeds).map_err(usage_err)?;
    let manifest = RunManifest::new(
        "simulate",
        None,
        ManifestConfig::Simulate(SimulateConfig {
            spec: spec.clone(),
            n_grid: n_grid.clone(),
            trials: args.trials,
        }),
        args.seed,
    );
    if let Some(csv_path) = &args.csv {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in experiment.power_rows() {
            writer
                .serialize(&row)
                .map_err(|e| CliError::Data(format!("cannot serialize power curve: {e}")))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::Data(format!("cannot serialize power curve: {e}")))?;
        write_output(Some(csv_path), &String::from_utf8(bytes).expect("CSV output is UTF-8"))
            .map_err(io_err)?;
    }
    let report = SimulateReport { experiment, manifest };
    write_output(args.out.as_deref(), &to_json(&report)).map_err(io_err)?;
    Ok(EXIT_ACCEPT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_parsing() {
        assert_eq!(parse_subset("0,2,5").unwrap().indices(), &[0, 2, 5]);
        // order is normalized
        assert_eq!(parse_subset("5,0,2").unwrap().indices(), &[0, 2, 5]);
        assert_eq!(parse_subset(" 1 , 3 ").unwrap().indices(), &[1, 3]);
        let err = parse_subset("0,0").unwrap_err();
        assert!(err.to_string().contains("duplicate feature index 0"));
        assert!(matches!(err, CliError::Usage(_)));
        assert!(parse_subset("a,b").is_err());
        assert!(parse_subset("").is_err());
        assert!(parse_subset("-1").is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<usize>("250,1000", "--n-grid").unwrap(), vec![250, 1000]);
        assert_eq!(parse_list::<f64>("0,0.5,-0.5", "--a-grid").unwrap(), vec![0.0, 0.5, -0.5]);
        let err = parse_list::<usize>("10,x", "--n-grid").unwrap_err();
        assert!(err.to_string().contains("--n-grid"));
    }

    #[test]
    fn scenario_names_use_underscores() {
        let cli = Cli::try_parse_from([
            "losstest", "simulate", "--scenario", "cls_alt_deterministic",
            "--n-grid", "10", "--trials", "1", "--seed", "7",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate(args) => {
                assert!(args.scenario == ScenarioArg::ClsAltDeterministic);
                assert_eq!(args.d, 2);
                assert_eq!(args.subset, "0");
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from([
            "losstest", "simulate", "--scenario", "cls-alt-deterministic",
            "--n-grid", "10", "--trials", "1", "--seed", "7",
        ])
        .is_err());
    }

    #[test]
    fn help_maps_to_success_and_bad_flags_to_usage() {
        assert_eq!(run_from(["losstest", "--help"]), EXIT_ACCEPT);
        assert_eq!(run_from(["losstest", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run_from(["losstest", "test", "--bogus"]), EXIT_USAGE);
    }

    #[test]
    fn jitter_policy_derives_from_seed_stream_one() {
        let cli = Cli::try_parse_from([
            "losstest", "test", "--subset", "0", "--data", "x.csv", "--task", "classify",
            "--seed", "99", "--ties", "jitter",
        ])
        .unwrap();
        let Command::Test(args) = cli.command else { panic!("wrong subcommand") };
        let config = build_config(parse_subset(&args.subset).unwrap(), &args.data);
        assert_eq!(config.tie_policy, TiePolicy::Jitter(RngSpec::new(99, JITTER_STREAM)));
        assert_eq!(config.split_shuffle, Some(RngSpec::new(99, SPLIT_STREAM)));
        assert_eq!(config.statistic_variant, StatisticVariant::Excess);
        assert_eq!(config.threshold_variant, ThresholdVariant::Standard);
    }
}
