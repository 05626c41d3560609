//! Statistical primitives: hypothesis tests, percent delta, correlation
//! between evaluation and A/B point estimates, decay fitting and empirical
//! power.

mod correlation;
mod gamma;
mod hypothesis;
mod power;
mod summary;

pub use correlation::{directional_agreement, pearson_corr, PointEstimatePair};
pub use gamma::{fit_gamma, gamma_candidates, GammaFit};
pub use hypothesis::{
    binomial_two_sided_exact, binomial_two_sided_normal, chi_square_independence, two_proportion_test,
    welch_from_summaries, welch_t_test, ChiSquareResult, WelchResult, EXACT_BINOMIAL_MAX_TRIALS,
};
pub use power::{geometric_grid, min_sample_for_power, GridPoint, PowerOutcome, PowerSpec, ReplicationSource};
pub use summary::SampleSummary;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("baseline mean is zero; percent delta undefined")]
    ZeroBaseline,
    #[error("sample too small: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero variance in {0}; correlation undefined")]
    ZeroVariance(&'static str),
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),
    #[error("invalid power spec: {0}")]
    InvalidPowerSpec(String),
    #[error("invalid contingency table: {0}")]
    InvalidTable(String),
}

/// Relative change of `tau_hat` against the baseline mean.
pub fn percent_delta(tau_hat: f64, baseline_mean: f64) -> Result<f64, StatsError> {
    if baseline_mean == 0.0 {
        return Err(StatsError::ZeroBaseline);
    }
    Ok(tau_hat / baseline_mean)
}
