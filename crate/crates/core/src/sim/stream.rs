//! Log-free reduction of simulated users into mergeable statistics, used by
//! power analysis and the validation corpus.

use serde::{Deserialize, Serialize};

use super::engine::{ExperimentConfig, Simulator};
use super::SimError;
use crate::attribution::attribute_events;
use crate::counterfactual::{aggregate_users, mean_difference_report, CfHyperparams, CfTally};
use crate::interleave::{credit_events, user_quality, PreferenceTally, QualityTally};
use crate::stats::{min_sample_for_power, PowerOutcome, PowerSpec, ReplicationSource, SampleSummary};
use crate::types::{EstimateReport, EventKind, Mode, RankerLabel, UserId};

pub const CF_METRICS: [&str; 6] = ["tau_decomp", "tau_diff", "tau_sim", "tau_g", "tau_win_loss", "tau_oec"];

/// Sufficient statistics of a group of users for every metric of the mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    /// Bookings per user, `[control-shown, treatment-shown]`.
    pub conversion: [SampleSummary; 2],
    pub preference: PreferenceTally,
    pub click_preference: PreferenceTally,
    pub quality: QualityTally,
    /// One tally per hyperparameter variant of the source.
    pub cf: Vec<CfTally>,
    pub missing_in_cf: u64,
}

impl BlockStats {
    pub fn merge(&mut self, other: &BlockStats) {
        self.conversion[0].merge(&other.conversion[0]);
        self.conversion[1].merge(&other.conversion[1]);
        self.preference.merge(&other.preference);
        self.click_preference.merge(&other.click_preference);
        self.quality.merge(&other.quality);
        if self.cf.is_empty() {
            self.cf = other.cf.clone();
        } else {
            for (a, b) in self.cf.iter_mut().zip(&other.cf) {
                a.merge(b);
            }
        }
        self.missing_in_cf += other.missing_in_cf;
    }

    pub fn conversion_report(&self, experiment: &str) -> Option<EstimateReport> {
        let [c, t] = &self.conversion;
        (t.n > 0 && c.n > 0).then(|| mean_difference_report("conversion", experiment, t, c))
    }
}

/// A simulator whose users are grouped into fixed-size blocks.
///
/// Block `i` holds users with ids `i * block_size + 1 ..= (i + 1) * block_size`;
/// delivery routing is bypassed.
#[derive(Debug, Clone)]
pub struct SimSource {
    sim: Simulator,
    block_size: u64,
    variants: Vec<CfHyperparams>,
}

impl SimSource {
    /// `variants` lists the counterfactual hyperparameters to tally; it
    /// defaults to the config's own when empty.
    pub fn new(cfg: ExperimentConfig, block_size: u64, variants: Vec<CfHyperparams>) -> Result<Self, SimError> {
        if block_size == 0 {
            return Err(SimError::InvalidConfig("block_size must be positive".into()));
        }
        for h in &variants {
            h.validate()?;
        }
        let variants = if variants.is_empty() {
            vec![cfg.cf_hyperparams]
        } else {
            variants
        };
        Ok(Self {
            sim: Simulator::new(cfg)?,
            block_size,
            variants,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        self.sim.config()
    }

    pub fn variants(&self) -> &[CfHyperparams] {
        &self.variants
    }

    fn empty(&self) -> BlockStats {
        BlockStats {
            cf: vec![CfTally::default(); self.variants.len()],
            ..BlockStats::default()
        }
    }

    /// Simulates one user and folds their outcomes into `stats`.
    pub fn accumulate(&self, user: UserId, stats: &mut BlockStats) {
        let cfg = self.sim.config();
        let trace = self.sim.user_trace(user);
        if cfg.mode == Mode::Ab {
            push_conversion(&trace, stats);
            return;
        }
        let attribution =
            attribute_events(&trace.events, &trace.exposures, cfg.window).expect("simulated logs are consistent");
        match cfg.mode {
            Mode::Counterfactual => {
                push_conversion(&trace, stats);
                for (j, h) in self.variants.iter().enumerate() {
                    let (sample, diag) = aggregate_users(&cfg.experiment_id, &trace.exposures, &attribution.pairs, h)
                        .expect("simulated logs are consistent");
                    if j == 0 {
                        stats.missing_in_cf += diag.missing_in_cf;
                    }
                    for u in &sample.users {
                        stats.cf[j].push(u, h);
                    }
                }
            }
            Mode::Interleaving => {
                for c in credit_events(&trace.exposures, &attribution.pairs, cfg.preference_event).credits {
                    stats.preference.push(&c);
                }
                for c in credit_events(&trace.exposures, &attribution.pairs, EventKind::Click).credits {
                    stats.click_preference.push(&c);
                }
                for q in user_quality(&trace.exposures, &attribution.pairs).values() {
                    stats.quality.push(q);
                }
            }
            Mode::Ab => unreachable!(),
        }
    }

    /// Statistics of users with ids `first..first + count`, simulated in parallel.
    pub fn users(&self, first: u64, count: u64) -> BlockStats {
        let chunk = self.block_size;
        let n_chunks = count.div_ceil(chunk);
        let parts = crate::par::map_range(0..n_chunks, |k| {
            let mut s = self.empty();
            let lo = first + k * chunk;
            let hi = (lo + chunk).min(first + count);
            (lo..hi).for_each(|u| self.accumulate(UserId(u), &mut s));
            s
        });
        let mut total = self.empty();
        parts.iter().for_each(|p| total.merge(p));
        total
    }
}

fn push_conversion(trace: &super::engine::UserTrace, stats: &mut BlockStats) {
    let w = trace.exposures[0]
        .shown_ranker
        .expect("A/B and counterfactual exposures carry a shown ranker");
    let bookings = trace.events.iter().filter(|e| e.kind == EventKind::Booking).count() as f64;
    let g = match w {
        RankerLabel::Control => 0,
        RankerLabel::Treatment => 1,
    };
    stats.conversion[g].push(bookings);
}

impl ReplicationSource for SimSource {
    type Stats = BlockStats;

    fn block_size(&self) -> u64 {
        self.block_size
    }

    fn block(&self, index: u64) -> BlockStats {
        let mut s = self.empty();
        let first = index * self.block_size + 1;
        (first..first + self.block_size).for_each(|u| self.accumulate(UserId(u), &mut s));
        s
    }

    fn merge(into: &mut BlockStats, other: &BlockStats) {
        into.merge(other);
    }
}

fn default_replications() -> usize {
    100
}

fn default_block() -> u64 {
    250
}

fn default_metrics() -> Vec<String> {
    ["tau_pref", "tau_g", "tau_win_loss", "tau_oec"]
        .map(String::from)
        .to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Rankers, guests and hyperparameters; its mode is ignored.
    pub base: ExperimentConfig,
    pub n_max: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_block")]
    pub block_size: u64,
    #[serde(default)]
    pub spec: PowerSpec,
    /// Online metrics to compare against A/B conversion.
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub metric: String,
    pub required_n: Option<u64>,
    /// A/B required n over this metric's; a lower bound when `is_lower_bound`.
    pub speedup: Option<f64>,
    pub is_lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub spec: PowerSpec,
    pub conversion: PowerOutcome,
    pub rows: Vec<SpeedupRow>,
    pub outcomes: Vec<PowerOutcome>,
}

type PFn = Box<dyn Fn(&BlockStats) -> f64 + Sync>;

fn metric_fn(name: &str, experiment: String, h: CfHyperparams) -> Option<(Mode, PFn)> {
    let f: (Mode, PFn) = match name {
        "conversion" => (
            Mode::Counterfactual,
            Box::new(move |s: &BlockStats| s.conversion_report(&experiment).map_or(1.0, |r| r.p_value)),
        ),
        "tau_pref" => (
            Mode::Interleaving,
            Box::new(|s: &BlockStats| s.preference.result().map_or(1.0, |r| r.p_value)),
        ),
        "tau_pref_click" => (
            Mode::Interleaving,
            Box::new(|s: &BlockStats| s.click_preference.result().map_or(1.0, |r| r.p_value)),
        ),
        _ => {
            let idx = CF_METRICS.iter().position(|m| *m == name)?;
            (
                Mode::Counterfactual,
                Box::new(move |s: &BlockStats| s.cf[0].reports(&experiment, &h).map_or(1.0, |r| r[idx].p_value)),
            )
        }
    };
    Some(f)
}

/// Required sample sizes for A/B conversion and each requested online
/// metric, with the speedup of each over A/B.
///
/// A/B conversion is measured on counterfactual-mode traffic, where every
/// guest sees exactly one ranker's full list just as in an A/B test.
pub fn power_analysis(cfg: &PowerConfig) -> Result<PowerReport, SimError> {
    cfg.spec.validate()?;
    let h = cfg.base.cf_hyperparams;
    let id = cfg.base.experiment_id.clone();
    let mut names = vec!["conversion".to_string()];
    names.extend(cfg.metrics.iter().filter(|m| *m != "conversion").cloned());
    let mut by_mode: Vec<(Mode, Vec<(String, PFn)>)> = Vec::new();
    for name in &names {
        let (mode, f) = metric_fn(name, id.clone(), h)
            .ok_or_else(|| SimError::InvalidConfig(format!("unknown power metric `{name}`")))?;
        match by_mode.iter_mut().find(|(m, _)| *m == mode) {
            Some((_, v)) => v.push((name.clone(), f)),
            None => by_mode.push((mode, vec![(name.clone(), f)])),
        }
    }
    let mut outcomes = Vec::new();
    for (mode, metrics) in &by_mode {
        let base = ExperimentConfig {
            mode: *mode,
            delivery: None,
            ..cfg.base.clone()
        };
        let source = SimSource::new(base, cfg.block_size, Vec::new())?;
        let refs: Vec<(&str, &PFn)> = metrics.iter().map(|(n, f)| (n.as_str(), f)).collect();
        outcomes.extend(min_sample_for_power(
            &source,
            &refs,
            &cfg.spec,
            cfg.n_max,
            cfg.replications,
        )?);
    }
    let order = |o: &PowerOutcome| names.iter().position(|n| *n == o.metric);
    outcomes.sort_by_key(order);
    let conversion = outcomes[0].clone();
    let rows = outcomes[1..]
        .iter()
        .map(|o| {
            let (ab, is_lower_bound) = match conversion.required_n {
                Some(n) => (n, false),
                None => (conversion.n_max, true),
            };
            SpeedupRow {
                metric: o.metric.clone(),
                required_n: o.required_n,
                speedup: o.required_n.map(|n| ab as f64 / n as f64),
                is_lower_bound,
            }
        })
        .collect();
    Ok(PowerReport {
        spec: cfg.spec,
        conversion,
        rows,
        outcomes: outcomes[1..].to_vec(),
    })
}
