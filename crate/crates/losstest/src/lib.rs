//! Standard-library companion to `losstest-core`: CSV ingestion, report
//! files, a parallel Monte Carlo driver, and the command-line interface.

pub mod cli;
pub mod csvio;
pub mod report;
pub mod sim;

pub use losstest_core;
