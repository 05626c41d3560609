//! Synthetic search traffic: catalog, rankers, guests and the experiment
//! runner producing exposure and event logs in every mode.

mod catalog;
mod engine;
mod meta;
mod ranker;
mod stream;
mod user;

pub use catalog::{gen_catalog, Catalog, Listing};
pub use engine::{run_experiment, CatalogConfig, ExperimentConfig, ExperimentRun, Simulator, UserTrace};
pub use meta::{run_meta, MetaConfig, MetaExperiment, MetaMetric, MetaReport, SweepRow};
pub use ranker::{rank, RankerSpec, SearchSeed};
pub use stream::{power_analysis, BlockStats, PowerConfig, PowerReport, SimSource, SpeedupRow, CF_METRICS};
pub use user::{logistic, simulate_search, Behavior, SearchOutcome, UserModel, MAX_SEARCHES_PER_JOURNEY};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::counterfactual::CfError;
use crate::delivery::DeliveryError;
use crate::stats::StatsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid ranker: {0}")]
    InvalidRanker(String),
    #[error("invalid user model: {0}")]
    InvalidUserModel(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Delivery(#[from] DeliveryError),
    #[error(transparent)]
    Counterfactual(#[from] CfError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl SimError {
    /// Whether the failure is statistical degeneracy rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        match self {
            SimError::Analysis(e) => e.is_degenerate(),
            SimError::Counterfactual(CfError::EmptyGroup(_)) => true,
            SimError::Stats(StatsError::ZeroVariance(_) | StatsError::TooFewSamples { .. }) => true,
            _ => false,
        }
    }
}
