//! Log-level analysis entry point shared by the simulator and the CLI.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ab::conversion_delta;
use crate::attribution::{attribute_events, AttributionError, AttributionWindow};
use crate::counterfactual::{aggregate_users, estimate_all, CfError, CfHyperparams};
use crate::interleave::{
    credit_events, preference_stat, quality_metrics, InterleaveError, PreferenceResult, QualityReport,
};
use crate::types::{EstimateReport, EventKind, EventRecord, ExposureRecord, Mode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("log has no exposures")]
    Empty,
    #[error("log mixes modes {0} and {1}")]
    MixedModes(Mode, Mode),
    #[error("A/B log needs users in both groups")]
    OneSidedAb,
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Interleave(#[from] InterleaveError),
    #[error(transparent)]
    Counterfactual(#[from] CfError),
}

impl AnalysisError {
    /// Errors caused by the data being statistically unusable rather than malformed.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            AnalysisError::OneSidedAb
                | AnalysisError::Interleave(InterleaveError::NoUsers)
                | AnalysisError::Counterfactual(CfError::EmptyGroup(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub experiment: String,
    pub window: AttributionWindow,
    /// Event kind credited by the interleaving preference.
    pub preference_event: EventKind,
    pub cf_hyperparams: CfHyperparams,
}

impl AnalysisParams {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            window: AttributionWindow::default(),
            preference_event: EventKind::Booking,
            cf_hyperparams: CfHyperparams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "SCREAMING_SNAKE_CASE")]
#[allow(clippy::large_enum_variant)]
pub enum ModeReport {
    #[serde(rename = "AB")]
    Ab { conversion: EstimateReport },
    Interleaving {
        preference: PreferenceResult,
        /// Preference credited on clicks, reported alongside the primary one.
        click_preference: PreferenceResult,
        quality: QualityReport,
        skipped_events: usize,
    },
    Counterfactual {
        estimates: Vec<EstimateReport>,
        conversion: EstimateReport,
        missing_in_cf: u64,
        skipped_events: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub experiment: String,
    pub n_exposures: usize,
    pub n_events: usize,
    pub dropped_bookings: u64,
    pub result: ModeReport,
}

impl AnalysisReport {
    /// Every point estimate in the report, keyed by metric name.
    pub fn estimates(&self) -> Vec<(String, f64, f64)> {
        match &self.result {
            ModeReport::Ab { conversion } => vec![row(conversion)],
            ModeReport::Interleaving {
                preference,
                click_preference,
                quality,
                ..
            } => {
                let mut out = vec![
                    ("tau_pref".to_string(), preference.tau_pref, preference.p_value),
                    (
                        "tau_pref_click".to_string(),
                        click_preference.tau_pref,
                        click_preference.p_value,
                    ),
                ];
                out.extend(quality.metrics().into_iter().map(row));
                out
            }
            ModeReport::Counterfactual {
                estimates, conversion, ..
            } => {
                let mut out: Vec<_> = estimates.iter().map(row).collect();
                out.push(row(conversion));
                out
            }
        }
    }
}

fn row(r: &EstimateReport) -> (String, f64, f64) {
    (r.metric_name.clone(), r.tau_hat, r.p_value)
}

/// The single mode of a log.
pub fn log_mode(exposures: &[ExposureRecord]) -> Result<Mode, AnalysisError> {
    let first = exposures.first().ok_or(AnalysisError::Empty)?.mode;
    match exposures.iter().find(|e| e.mode != first) {
        Some(e) => Err(AnalysisError::MixedModes(first, e.mode)),
        None => Ok(first),
    }
}

/// Computes the mode's estimates from an exposure log and an event log.
pub fn analyze(
    exposures: &[ExposureRecord],
    events: &[EventRecord],
    params: &AnalysisParams,
) -> Result<AnalysisReport, AnalysisError> {
    let mode = log_mode(exposures)?;
    let experiment = params.experiment.as_str();
    let attribution = attribute_events(events, exposures, params.window)?;
    let result = match mode {
        Mode::Ab => ModeReport::Ab {
            conversion: conversion_delta(experiment, exposures, events).ok_or(AnalysisError::OneSidedAb)?,
        },
        Mode::Interleaving => {
            let primary = credit_events(exposures, &attribution.pairs, params.preference_event);
            let clicks = credit_events(exposures, &attribution.pairs, EventKind::Click);
            ModeReport::Interleaving {
                preference: preference_stat(&primary.credits)?,
                click_preference: preference_stat(&clicks.credits)?,
                quality: quality_metrics(exposures, &attribution.pairs, experiment)?,
                skipped_events: primary.skipped.len(),
            }
        }
        Mode::Counterfactual => {
            let (sample, diag) = aggregate_users(experiment, exposures, &attribution.pairs, &params.cf_hyperparams)?;
            ModeReport::Counterfactual {
                estimates: estimate_all(&sample, &params.cf_hyperparams)?,
                conversion: conversion_delta(experiment, exposures, events).ok_or(AnalysisError::OneSidedAb)?,
                missing_in_cf: diag.missing_in_cf,
                skipped_events: diag.skipped.len(),
            }
        }
    };
    Ok(AnalysisReport {
        experiment: experiment.to_string(),
        n_exposures: exposures.len(),
        n_events: events.len(),
        dropped_bookings: attribution.dropped_bookings,
        result,
    })
}
