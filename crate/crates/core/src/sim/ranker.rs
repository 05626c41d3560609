//! The ranker zoo used by simulated experiments.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::catalog::Catalog;
use super::SimError;
use crate::rng::StreamKey;
use crate::types::{ListingId, SearchId};

fn default_label() -> String {
    "shared".into()
}

fn default_dup_gap() -> f64 {
    0.25
}

/// How a ranker orders the candidates of a search.
///
/// Random components draw from streams named by `label`: two rankers with
/// the same label see the same noise on the same search, which makes their
/// outputs comparable. Rankers with different labels are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RankerSpec {
    /// Sort by `utility + noise_sd * z` with standard normal `z` per listing.
    NoisyUtility {
        noise_sd: f64,
        #[serde(default = "default_label")]
        label: String,
    },
    /// Apply `base`, then move one uniformly chosen listing to rank 1.
    RandomToTop {
        base: Box<RankerSpec>,
        #[serde(default = "default_label")]
        label: String,
    },
    /// Apply `base`, then scan the top `swap_depth` ranks and demote the upper
    /// listing of every adjacent pair whose utilities differ by less than
    /// `dup_gap` by `penalty` positions.
    DiversityRerank {
        base: Box<RankerSpec>,
        swap_depth: usize,
        penalty: usize,
        #[serde(default = "default_dup_gap")]
        dup_gap: f64,
    },
    /// Apply `base`, then swap 1-based ranks `i` and `j`.
    PositionSwap { base: Box<RankerSpec>, i: usize, j: usize },
}

impl RankerSpec {
    pub fn noisy(noise_sd: f64) -> Self {
        RankerSpec::NoisyUtility {
            noise_sd,
            label: default_label(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            RankerSpec::NoisyUtility { noise_sd, .. } => {
                if !(noise_sd.is_finite() && *noise_sd >= 0.0) {
                    return Err(SimError::InvalidRanker(format!("noise_sd {noise_sd} must be >= 0")));
                }
                Ok(())
            }
            RankerSpec::RandomToTop { base, .. } => base.validate(),
            RankerSpec::DiversityRerank {
                base, penalty, dup_gap, ..
            } => {
                if *penalty == 0 {
                    return Err(SimError::InvalidRanker("penalty must be positive".into()));
                }
                if !(dup_gap.is_finite() && *dup_gap >= 0.0) {
                    return Err(SimError::InvalidRanker(format!("dup_gap {dup_gap} must be >= 0")));
                }
                base.validate()
            }
            RankerSpec::PositionSwap { base, i, j } => {
                if *i == 0 || *j == 0 {
                    return Err(SimError::InvalidRanker("swap ranks are 1-based".into()));
                }
                base.validate()
            }
        }
    }
}

/// Randomness address of one search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSeed {
    pub master_seed: u64,
    pub search: SearchId,
}

/// Orders `candidates` (duplicate-free) under `spec`.
pub fn rank(
    spec: &RankerSpec,
    catalog: &Catalog,
    candidates: &[ListingId],
    seed: SearchSeed,
) -> Result<Vec<ListingId>, SimError> {
    match spec {
        RankerSpec::NoisyUtility { noise_sd, label } => {
            let mut scored: Vec<(f64, ListingId)> = if *noise_sd == 0.0 {
                candidates.iter().map(|&id| (catalog.utility(id), id)).collect()
            } else {
                let mut rng = StreamKey::new(seed.master_seed, &format!("noise/{label}")).rng(seed.search.0);
                candidates
                    .iter()
                    .map(|&id| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (catalog.utility(id) + noise_sd * z, id)
                    })
                    .collect()
            };
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            Ok(scored.into_iter().map(|(_, id)| id).collect())
        }
        RankerSpec::RandomToTop { base, label } => {
            let mut list = rank(base, catalog, candidates, seed)?;
            if !list.is_empty() {
                let mut rng = StreamKey::new(seed.master_seed, &format!("to-top/{label}")).rng(seed.search.0);
                let pick = rng.random_range(0..list.len());
                let item = list.remove(pick);
                list.insert(0, item);
            }
            Ok(list)
        }
        RankerSpec::DiversityRerank {
            base,
            swap_depth,
            penalty,
            dup_gap,
        } => {
            let mut list = rank(base, catalog, candidates, seed)?;
            let depth = (*swap_depth).min(list.len());
            let mut i = 0;
            while i + 1 < depth {
                let gap = (catalog.utility(list[i]) - catalog.utility(list[i + 1])).abs();
                if gap < *dup_gap {
                    let item = list.remove(i);
                    let to = (i + penalty).min(list.len());
                    list.insert(to, item);
                    i += penalty + 1;
                } else {
                    i += 1;
                }
            }
            Ok(list)
        }
        RankerSpec::PositionSwap { base, i, j } => {
            let mut list = rank(base, catalog, candidates, seed)?;
            if *i > list.len() || *j > list.len() {
                return Err(SimError::InvalidRanker(format!(
                    "swap ranks ({i}, {j}) exceed list length {}",
                    list.len()
                )));
            }
            list.swap(i - 1, j - 1);
            Ok(list)
        }
    }
}
