use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::StreamKey;
use crate::types::ListingId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Listing {
    pub id: ListingId,
    /// Latent booking attractiveness.
    pub utility: f64,
}

/// Synthetic listings with ids `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub listings: Vec<Listing>,
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.listings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.listings.is_empty()
    }

    pub fn utility(&self, id: ListingId) -> f64 {
        self.listings[(id.0 - 1) as usize].utility
    }
}

/// Utilities are i.i.d. standard normal draws from the catalog seed.
pub fn gen_catalog(seed: u64, n_listings: usize) -> Catalog {
    assert!(n_listings >= 1, "catalog needs at least one listing");
    let mut rng = StreamKey::new(seed, "catalog").rng(0);
    let listings = (0..n_listings)
        .map(|i| Listing {
            id: ListingId(i as u64 + 1),
            utility: StandardNormal.sample(&mut rng),
        })
        .collect();
    Catalog { listings }
}
