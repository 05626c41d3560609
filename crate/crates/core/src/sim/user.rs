//! Simulated guests: how a shown list turns into clicks and bookings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Behavior {
    /// Top-down scan: rank `r` is examined with probability
    /// `examination_decay^(r-1)`, clicks depend on utility and a booking
    /// ends the scan.
    Cascade,
    /// Every shown listing is clicked with the same probability regardless
    /// of rank or utility.
    RandomClick,
    /// Engages with one anchor listing picked by examination weight, then
    /// books the best of the anchor and its immediate neighbours.
    PairwiseLocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub behavior: Behavior,
    pub examination_decay: f64,
    /// Click probability given examination is
    /// `logistic(click_intercept + click_slope * utility)`.
    pub click_intercept: f64,
    pub click_slope: f64,
    pub book_given_click: f64,
    pub searches_per_journey: u32,
}

impl Default for UserModel {
    fn default() -> Self {
        UserModel {
            behavior: Behavior::Cascade,
            examination_decay: 0.96,
            click_intercept: -3.0,
            click_slope: 3.0,
            book_given_click: 0.3,
            searches_per_journey: 2,
        }
    }
}

pub const MAX_SEARCHES_PER_JOURNEY: u32 = 1000;

impl UserModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::InvalidUserModel(format!("{name} = {v} is not a probability")))
            }
        };
        prob("examination_decay", self.examination_decay)?;
        prob("book_given_click", self.book_given_click)?;
        if !self.click_intercept.is_finite() || !self.click_slope.is_finite() {
            return Err(SimError::InvalidUserModel("click coefficients must be finite".into()));
        }
        if self.searches_per_journey == 0 || self.searches_per_journey > MAX_SEARCHES_PER_JOURNEY {
            return Err(SimError::InvalidUserModel(format!(
                "searches_per_journey must be in 1..={MAX_SEARCHES_PER_JOURNEY}"
            )));
        }
        Ok(())
    }

    fn click_prob(&self, utility: f64) -> f64 {
        logistic(self.click_intercept + self.click_slope * utility)
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// What a guest did on one search, as 0-based positions in the shown list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchOutcome {
    pub clicks: Vec<usize>,
    pub booking: Option<usize>,
}

/// Simulates one search on a shown list given each position's utility.
pub fn simulate_search<R: Rng>(utilities: &[f64], model: &UserModel, rng: &mut R) -> SearchOutcome {
    let mut out = SearchOutcome::default();
    match model.behavior {
        Behavior::Cascade => {
            for (pos, &u) in utilities.iter().enumerate() {
                if pos > 0 && !rng.random_bool(model.examination_decay) {
                    break;
                }
                if rng.random_bool(model.click_prob(u)) {
                    out.clicks.push(pos);
                    if rng.random_bool(model.book_given_click) {
                        out.booking = Some(pos);
                        break;
                    }
                }
            }
        }
        Behavior::RandomClick => {
            let p = logistic(model.click_intercept);
            for pos in 0..utilities.len() {
                if rng.random_bool(p) {
                    out.clicks.push(pos);
                    if rng.random_bool(model.book_given_click) {
                        out.booking = Some(pos);
                        break;
                    }
                }
            }
        }
        Behavior::PairwiseLocal => {
            if utilities.is_empty() || !rng.random_bool(logistic(model.click_intercept)) {
                return out;
            }
            let anchor = examination_draw(utilities.len(), model.examination_decay, rng);
            out.clicks.push(anchor);
            if rng.random_bool(model.book_given_click) {
                let lo = anchor.saturating_sub(1);
                let hi = (anchor + 1).min(utilities.len() - 1);
                let best = (lo..=hi)
                    .max_by(|&a, &b| utilities[a].total_cmp(&utilities[b]).then(b.cmp(&a)))
                    .expect("non-empty neighbourhood");
                if best != anchor {
                    out.clicks.push(best);
                }
                out.booking = Some(best);
            }
        }
    }
    out
}

/// Position drawn with probability proportional to `decay^pos`.
fn examination_draw<R: Rng>(len: usize, decay: f64, rng: &mut R) -> usize {
    let total: f64 = (0..len).map(|p| decay.powi(p as i32)).sum();
    if total <= 0.0 {
        return 0;
    }
    let mut x = rng.random::<f64>() * total;
    for p in 0..len {
        let w = decay.powi(p as i32);
        if x < w {
            return p;
        }
        x -= w;
    }
    len - 1
}
