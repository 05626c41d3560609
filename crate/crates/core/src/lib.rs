//! Online evaluation of search rankers.
//!
//! The crate covers competitive-pair interleaving with credit attribution,
//! counterfactual metrics that compare the shown list against the unshown
//! ranker's list, the statistics behind both (tests, correlation with A/B,
//! decay fitting, empirical power), hash-based traffic delivery and a
//! synthetic search simulator that produces logs in every mode.

pub mod ab;
pub mod analysis;
pub mod attribution;
pub mod counterfactual;
pub mod delivery;
pub mod interleave;
pub mod log;
mod par;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod types;

pub use analysis::{analyze, AnalysisError, AnalysisParams, AnalysisReport, ModeReport};
pub use attribution::{attribute_events, AttributionWindow};
pub use counterfactual::CfHyperparams;
pub use interleave::interleave;
pub use types::*;
