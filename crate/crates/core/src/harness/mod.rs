//! Experiment plumbing: run configurations, rate fitting and check suites.

pub mod experiments;
pub mod oracles;
mod rate;
mod run;
mod suites;

pub use rate::{
    absolute_noise_floor, classify, noise_floor, rate_fit, rate_fit_above, rate_fit_values, rate_fit_values_above, RateReport,
    Verdict,
};
pub use run::{exit_code, run, RunConfig, SolverChoice, Start};
pub use suites::{check, CheckResult, SuiteReport, SUITES};
