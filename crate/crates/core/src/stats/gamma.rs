use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub intercept: f64,
    pub ranks_used: usize,
}

/// Fits `log(count_r) = a - r * log(1 / gamma)` across ranks.
///
/// Each rank is weighted by its count, which matches the Poisson variance of
/// a log count and keeps sparse tail ranks from dominating. Ranks with zero
/// count are ignored.
pub fn fit_gamma(histogram: &BTreeMap<u32, u64>) -> Result<GammaFit, StatsError> {
    let points: Vec<(f64, f64, f64)> = histogram
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&r, &c)| (r as f64, (c as f64).ln(), c as f64))
        .collect();
    if points.len() < 3 {
        return Err(StatsError::DegenerateHistogram(format!(
            "need at least 3 ranks with positive counts, got {}",
            points.len()
        )));
    }
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let mr = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mr).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mr) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let gamma = slope.exp();
    if !(gamma > 0.0 && gamma < 1.0) || slope.abs() < 1e-12 {
        return Err(StatsError::DegenerateHistogram(format!(
            "fitted decay {gamma:.6} is outside (0, 1); counts do not decrease with rank"
        )));
    }
    Ok(GammaFit {
        gamma,
        intercept: my - slope * mr,
        ranks_used: points.len(),
    })
}

/// Candidate decays `gamma0 + i * step` for `i` in `-half_width..=half_width`,
/// keeping only values inside (0, 1).
pub fn gamma_candidates(gamma0: f64, step: f64, half_width: u32) -> Vec<f64> {
    let hw = half_width as i64;
    (-hw..=hw)
        .map(|i| gamma0 + i as f64 * step)
        .filter(|g| *g > 0.0 && *g < 1.0)
        .collect()
}
