use serde::{Deserialize, Serialize};

use super::StatsError;

/// One evaluated ranker: evaluation-method point estimate against its A/B estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimatePair {
    pub ranker_id: String,
    pub m_eval: f64,
    pub m_ab: f64,
}

impl PointEstimatePair {
    pub fn new(ranker_id: impl Into<String>, m_eval: f64, m_ab: f64) -> Self {
        Self {
            ranker_id: ranker_id.into(),
            m_eval,
            m_ab,
        }
    }
}

/// Pearson correlation between evaluation and A/B point estimates,
/// normalized by sample standard deviations.
pub fn pearson_corr(pairs: &[PointEstimatePair]) -> Result<f64, StatsError> {
    let n = pairs.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    let nf = n as f64;
    let mean_e = pairs.iter().map(|p| p.m_eval).sum::<f64>() / nf;
    let mean_a = pairs.iter().map(|p| p.m_ab).sum::<f64>() / nf;
    let (mut see, mut saa, mut sea) = (0.0, 0.0, 0.0);
    for p in pairs {
        let de = p.m_eval - mean_e;
        let da = p.m_ab - mean_a;
        see += de * de;
        saa += da * da;
        sea += de * da;
    }
    if see <= 0.0 {
        return Err(StatsError::ZeroVariance("evaluation estimates"));
    }
    if saa <= 0.0 {
        return Err(StatsError::ZeroVariance("A/B estimates"));
    }
    // The (n - 1) factors of covariance and both standard deviations cancel.
    Ok((sea / (see.sqrt() * saa.sqrt())).clamp(-1.0, 1.0))
}

/// Fraction of pairs whose two estimates share a sign. A zero agrees with anything.
pub fn directional_agreement(pairs: &[PointEstimatePair]) -> f64 {
    if pairs.is_empty() {
        return f64::NAN;
    }
    let agree = pairs
        .iter()
        .filter(|p| p.m_eval == 0.0 || p.m_ab == 0.0 || (p.m_eval > 0.0) == (p.m_ab > 0.0))
        .count();
    agree as f64 / pairs.len() as f64
}
