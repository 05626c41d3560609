//! Validation corpus: many simulated ranker pairs, each measured online at a
//! small sample and by a large A/B test used as ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::engine::ExperimentConfig;
use super::ranker::RankerSpec;
use super::stream::{SimSource, CF_METRICS};
use super::SimError;
use crate::counterfactual::CfHyperparams;
use crate::rng::mix64;
use crate::stats::{directional_agreement, pearson_corr, PointEstimatePair};
use crate::types::Mode;

fn default_alphas() -> Vec<u32> {
    vec![1, 2]
}

fn default_gammas() -> Vec<f64> {
    vec![0.9, 0.95]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    /// Control ranker, guests and hyperparameters shared by every pair.
    pub base: ExperimentConfig,
    pub n_experiments: usize,
    /// Treatment noise levels, cycled over the corpus. The control keeps the
    /// base noise, so levels below it are improvements.
    pub effect_grid: Vec<f64>,
    /// Users of each online (interleaving and counterfactual) measurement.
    pub n_online_users: u64,
    /// Users of each ground-truth A/B measurement.
    pub n_ab_users: u64,
    #[serde(default = "default_alphas")]
    pub alpha_sweep: Vec<u32>,
    #[serde(default = "default_gammas")]
    pub gamma_sweep: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaExperiment {
    pub index: usize,
    pub treatment: RankerSpec,
    pub ab_conversion: f64,
    pub ab_p_value: f64,
    /// Online point estimates by metric name.
    pub estimates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaMetric {
    pub metric: String,
    /// `None` when the correlation is undefined; `error` says why.
    pub pearson: Option<f64>,
    pub error: Option<String>,
    pub directional_agreement: f64,
}

/// Correlation with A/B of one metric under each value of a swept hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub metric: String,
    pub parameter: String,
    pub values: Vec<f64>,
    pub pearson: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaReport {
    pub experiments: Vec<MetaExperiment>,
    pub metrics: Vec<MetaMetric>,
    pub alpha_sweep: Vec<SweepRow>,
    pub gamma_sweep: Vec<SweepRow>,
}

impl MetaReport {
    pub fn metric(&self, name: &str) -> Option<&MetaMetric> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

const SWEPT: [&str; 3] = ["tau_g", "tau_win_loss", "tau_oec"];

fn variant_key(metric: &str, h: &CfHyperparams) -> String {
    format!("{metric}@alpha={},gamma={}", h.alpha, h.gamma)
}

fn treatment_for(base: &RankerSpec, noise_sd: f64) -> RankerSpec {
    match base {
        RankerSpec::NoisyUtility { label, .. } => RankerSpec::NoisyUtility {
            noise_sd,
            label: label.clone(),
        },
        _ => RankerSpec::noisy(noise_sd),
    }
}

/// Simulates `n_experiments` ranker pairs and correlates each online
/// metric with the large-sample A/B conversion delta.
pub fn run_meta(cfg: &MetaConfig) -> Result<MetaReport, SimError> {
    if cfg.n_experiments < 3 {
        return Err(SimError::InvalidConfig("a corpus needs at least 3 experiments".into()));
    }
    if cfg.effect_grid.is_empty() {
        return Err(SimError::InvalidConfig("effect_grid is empty".into()));
    }
    if cfg.n_online_users == 0 || cfg.n_ab_users == 0 {
        return Err(SimError::InvalidConfig("sample sizes must be positive".into()));
    }
    let base_h = cfg.base.cf_hyperparams;
    let mut variants = vec![base_h];
    for &alpha in &cfg.alpha_sweep {
        for &gamma in &cfg.gamma_sweep {
            let h = CfHyperparams { alpha, gamma, ..base_h };
            if !variants.contains(&h) {
                variants.push(h);
            }
        }
    }
    let block = 500;
    let mut experiments = Vec::with_capacity(cfg.n_experiments);
    for j in 0..cfg.n_experiments {
        let noise = cfg.effect_grid[j % cfg.effect_grid.len()];
        let treatment = treatment_for(&cfg.base.control, noise);
        let exp = ExperimentConfig {
            experiment_id: format!("{}-{j}", cfg.base.experiment_id),
            master_seed: mix64(cfg.base.master_seed ^ mix64(j as u64 + 1)),
            treatment: treatment.clone(),
            delivery: None,
            ..cfg.base.clone()
        };
        let with_mode = |mode: Mode| ExperimentConfig { mode, ..exp.clone() };
        let il = SimSource::new(with_mode(Mode::Interleaving), block, Vec::new())?.users(1, cfg.n_online_users);
        let cf = SimSource::new(with_mode(Mode::Counterfactual), block, variants.clone())?.users(1, cfg.n_online_users);
        let ab = SimSource::new(with_mode(Mode::Ab), block, Vec::new())?.users(1, cfg.n_ab_users);

        let truth = ab
            .conversion_report(&exp.experiment_id)
            .ok_or(SimError::InvalidConfig("A/B run left a group empty".into()))?;
        let mut estimates = BTreeMap::new();
        if let Ok(p) = il.preference.result() {
            estimates.insert("tau_pref".to_string(), p.tau_pref);
        }
        if let Ok(p) = il.click_preference.result() {
            estimates.insert("tau_pref_click".to_string(), p.tau_pref);
        }
        for (v, h) in variants.iter().enumerate() {
            let reports = cf.cf[v].reports(&exp.experiment_id, h)?;
            for r in reports {
                if v == 0 {
                    estimates.insert(r.metric_name.clone(), r.tau_hat);
                }
                if SWEPT.contains(&r.metric_name.as_str()) {
                    estimates.insert(variant_key(&r.metric_name, h), r.tau_hat);
                }
            }
        }
        if let Some(r) = cf.conversion_report(&exp.experiment_id) {
            estimates.insert("conversion_online".to_string(), r.tau_hat);
        }
        experiments.push(MetaExperiment {
            index: j,
            treatment,
            ab_conversion: truth.tau_hat,
            ab_p_value: truth.p_value,
            estimates,
        });
    }

    let pairs_for = |metric: &str| -> Vec<PointEstimatePair> {
        experiments
            .iter()
            .filter_map(|e| {
                e.estimates
                    .get(metric)
                    .map(|&m| PointEstimatePair::new(format!("exp-{}", e.index), m, e.ab_conversion))
            })
            .collect()
    };
    let mut names = vec!["tau_pref", "tau_pref_click"];
    names.extend(CF_METRICS);
    names.push("conversion_online");
    let metrics = names
        .iter()
        .map(|&name| {
            let pairs = pairs_for(name);
            let corr = pearson_corr(&pairs);
            MetaMetric {
                metric: name.to_string(),
                pearson: corr.as_ref().ok().copied(),
                error: corr.err().map(|e| e.to_string()),
                directional_agreement: directional_agreement(&pairs),
            }
        })
        .collect();
    let sweep = |parameter: &str, values: Vec<f64>, make: &dyn Fn(f64) -> CfHyperparams| -> Vec<SweepRow> {
        SWEPT
            .iter()
            .map(|&metric| SweepRow {
                metric: metric.to_string(),
                parameter: parameter.to_string(),
                pearson: values
                    .iter()
                    .map(|&v| pearson_corr(&pairs_for(&variant_key(metric, &make(v)))).ok())
                    .collect(),
                values: values.clone(),
            })
            .collect()
    };
    // The alpha sweep holds gamma at its first swept value, and vice versa.
    let gamma0 = cfg.gamma_sweep.first().copied().unwrap_or(base_h.gamma);
    let alpha0 = cfg.alpha_sweep.first().copied().unwrap_or(base_h.alpha);
    let alpha_sweep = sweep("alpha", cfg.alpha_sweep.iter().map(|&a| a as f64).collect(), &|a| {
        CfHyperparams {
            alpha: a as u32,
            gamma: gamma0,
            ..base_h
        }
    });
    let gamma_sweep = sweep("gamma", cfg.gamma_sweep.clone(), &|g| CfHyperparams {
        alpha: alpha0,
        gamma: g,
        ..base_h
    });
    Ok(MetaReport {
        experiments,
        metrics,
        alpha_sweep,
        gamma_sweep,
    })
}
