//! Two-layer traffic splitting and the randomization coins.
//!
//! Every assignment is a pure function of a stable 64-bit hash of the UTF-8
//! string `"salt|id"`: the first eight bytes of its SHA-256 digest read
//! big-endian. The top 53 bits map to a binary fraction in `[0, 1)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::{ExperimentId, LaneId, Mode, RankerLabel, SearchId, UserId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeliveryError {
    #[error("delivery config has no lanes")]
    NoLanes,
    #[error("lane `{0}` has non-positive weight {1}")]
    BadWeight(String, f64),
    #[error("lane weights sum to {0}, expected 1")]
    WeightsDoNotSumToOne(f64),
    #[error("online_eval_fraction {0} outside [0, 1]")]
    BadFraction(f64),
}

/// Stable hash of `"salt|id"`.
pub fn stable_hash(salt: &str, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(b"|");
    h.update(id.as_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(first)
}

/// Top 53 bits of `h` as a fraction in `[0, 1)`.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn unit_hash(salt: &str, id: u64) -> f64 {
    unit_interval(stable_hash(salt, &id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub weight: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryConfig {
    pub online_eval_fraction: f64,
    pub lanes: Vec<Lane>,
    pub layer1_salt: String,
    pub layer2_salt: String,
}

impl DeliveryConfig {
    /// All traffic into a single online-evaluation lane.
    pub fn single_lane(lane: LaneId, mode: Mode) -> Self {
        Self {
            online_eval_fraction: 1.0,
            lanes: vec![Lane {
                id: lane,
                weight: 1.0,
                mode,
            }],
            layer1_salt: "layer1".into(),
            layer2_salt: "layer2".into(),
        }
    }

    pub fn validate(&self) -> Result<(), DeliveryError> {
        if !(0.0..=1.0).contains(&self.online_eval_fraction) {
            return Err(DeliveryError::BadFraction(self.online_eval_fraction));
        }
        if self.lanes.is_empty() {
            return Err(DeliveryError::NoLanes);
        }
        for lane in &self.lanes {
            // Rejects NaN as well as non-positive weights.
            if lane.weight.is_nan() || lane.weight <= 0.0 {
                return Err(DeliveryError::BadWeight(lane.id.0.clone(), lane.weight));
            }
        }
        let total: f64 = self.lanes.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DeliveryError::WeightsDoNotSumToOne(total));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Layer {
    Ab,
    OnlineEval,
}

/// First layer: regular A/B traffic or online evaluation.
pub fn layer1_assign(user: UserId, cfg: &DeliveryConfig) -> Layer {
    if unit_hash(&cfg.layer1_salt, user.0) < cfg.online_eval_fraction {
        Layer::OnlineEval
    } else {
        Layer::Ab
    }
}

/// Second layer: weighted lane for an online-evaluation user.
pub fn layer2_assign(user: UserId, cfg: &DeliveryConfig) -> Result<&Lane, DeliveryError> {
    let last = cfg.lanes.last().ok_or(DeliveryError::NoLanes)?;
    let u = unit_hash(&cfg.layer2_salt, user.0);
    let mut acc = 0.0;
    for lane in &cfg.lanes {
        acc += lane.weight;
        if u < acc {
            return Ok(lane);
        }
    }
    Ok(last)
}

/// Per-search coin deciding which team drafts first.
pub fn coin_flip_search(search: SearchId, experiment: &ExperimentId) -> bool {
    unit_hash(&format!("{experiment}/search-coin"), search.0) < 0.5
}

/// Per-user shown ranker for counterfactual and A/B modes, stable for the
/// experiment's lifetime.
pub fn coin_flip_user(user: UserId, experiment: &ExperimentId) -> RankerLabel {
    if unit_hash(&format!("{experiment}/user-coin"), user.0) < 0.5 {
        RankerLabel::Treatment
    } else {
        RankerLabel::Control
    }
}
