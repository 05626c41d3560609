use serde::{Deserialize, Serialize};

use super::StatsError;

/// Target of a power computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    pub significance_level: f64,
    pub power_target: f64,
    /// Planted effect of the source, for reporting.
    pub effect: f64,
}

impl Default for PowerSpec {
    fn default() -> Self {
        Self {
            significance_level: 0.05,
            power_target: 0.8,
            effect: 0.0,
        }
    }
}

impl PowerSpec {
    pub fn validate(&self) -> Result<(), StatsError> {
        if 0.0 < self.significance_level && self.significance_level < self.power_target && self.power_target < 1.0 {
            Ok(())
        } else {
            Err(StatsError::InvalidPowerSpec(format!(
                "need 0 < significance_level ({}) < power_target ({}) < 1",
                self.significance_level, self.power_target
            )))
        }
    }
}

/// Replayable stream of i.i.d. users, reduced in fixed-size blocks to
/// mergeable sufficient statistics.
///
/// Block `i` covers users `[i * block_size, (i + 1) * block_size)` and must be
/// a pure function of `i`.
pub trait ReplicationSource: Sync {
    type Stats: Clone + Send;

    fn block_size(&self) -> u64;

    fn block(&self, index: u64) -> Self::Stats;

    fn merge(into: &mut Self::Stats, other: &Self::Stats);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n_users: u64,
    pub rejection_rate: f64,
    /// Monte-Carlo standard error of `rejection_rate`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerOutcome {
    pub metric: String,
    /// Smallest grid size reaching the power target; `None` when not reached at `n_max`.
    pub required_n: Option<u64>,
    pub n_max: u64,
    pub replications: usize,
    pub grid: Vec<GridPoint>,
}

impl PowerOutcome {
    pub fn describe(&self) -> String {
        match self.required_n {
            Some(n) => n.to_string(),
            None => format!("not reached at {}", self.n_max),
        }
    }
}

/// `start, 2 * start, 4 * start, ...` up to and including `max`.
pub fn geometric_grid(start: u64, max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = start.max(1);
    while n <= max {
        out.push(n);
        n = match n.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    out
}

/// Empirical required sample size for several metrics sharing one source.
///
/// Each grid size `n = block_size * 2^k` is evaluated with `replications`
/// disjoint replicates built from consecutive blocks; a replicate rejects when
/// its fixed-horizon p-value falls below the significance level. For each
/// metric the scan stops at the first size whose rejection rate reaches the
/// power target.
pub fn min_sample_for_power<S, F>(
    source: &S,
    metrics: &[(&str, F)],
    spec: &PowerSpec,
    n_max: u64,
    replications: usize,
) -> Result<Vec<PowerOutcome>, StatsError>
where
    S: ReplicationSource,
    F: Fn(&S::Stats) -> f64 + Sync,
{
    spec.validate()?;
    if replications == 0 {
        return Err(StatsError::InvalidPowerSpec("zero replications".into()));
    }
    let base = source.block_size();
    let grid = geometric_grid(base, n_max);
    let mut outcomes: Vec<PowerOutcome> = metrics
        .iter()
        .map(|(name, _)| PowerOutcome {
            metric: (*name).to_string(),
            required_n: None,
            n_max: grid.last().copied().unwrap_or(0),
            replications,
            grid: Vec::new(),
        })
        .collect();
    let mut blocks: Vec<S::Stats> = Vec::new();
    for &n in &grid {
        if outcomes.iter().all(|o| o.required_n.is_some()) {
            break;
        }
        let per_rep = (n / base) as usize;
        let needed = per_rep * replications;
        if blocks.len() < needed {
            let fresh = crate::par::map_range(blocks.len() as u64..needed as u64, |i| source.block(i));
            blocks.extend(fresh);
        }
        let replicates: Vec<S::Stats> = blocks[..needed]
            .chunks(per_rep)
            .map(|chunk| {
                let mut acc = chunk[0].clone();
                for b in &chunk[1..] {
                    S::merge(&mut acc, b);
                }
                acc
            })
            .collect();
        for (outcome, (_, p_value)) in outcomes.iter_mut().zip(metrics) {
            if outcome.required_n.is_some() {
                continue;
            }
            let rejections = replicates
                .iter()
                .filter(|r| p_value(r) < spec.significance_level)
                .count();
            let rate = rejections as f64 / replications as f64;
            outcome.grid.push(GridPoint {
                n_users: n,
                rejection_rate: rate,
                std_error: (rate * (1.0 - rate) / replications as f64).sqrt(),
            });
            if rate >= spec.power_target {
                outcome.required_n = Some(n);
            }
        }
    }
    Ok(outcomes)
}
