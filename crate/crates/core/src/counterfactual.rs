//! Online counterfactual estimators.
//!
//! Each booking is located in both the shown list and the counterfactual
//! (unshown) list of every search it is attributed to. The rank pair feeds a
//! similar/different decomposition and a position-gain model
//! `g = 1 - gamma^max(|r_shown - r_cf| - alpha, 0)`; user-level sums of these are
//! then compared between treatment-shown and control-shown users.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::AttributedEvent;
use crate::stats::{welch_from_summaries, SampleSummary};
use crate::types::{EstimateReport, EventKind, ExposureRecord, ListingId, Mode, RankedList, RankerLabel, UserId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfError {
    #[error("listing {0} is not in the shown list")]
    NotShown(ListingId),
    #[error("no {0} users in sample")]
    EmptyGroup(RankerLabel),
    #[error("estimates come from different experiments: {0} vs {1}")]
    ExperimentMismatch(String, String),
    #[error("user {0} saw both rankers")]
    InconsistentShownRanker(UserId),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfHyperparams {
    /// Top-k threshold of the similar bucket.
    pub k: u32,
    /// Rank-difference similarity threshold.
    pub alpha: u32,
    /// Attention decay.
    pub gamma: f64,
    /// Weight of the similar component.
    pub theta: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for CfHyperparams {
    fn default() -> Self {
        Self {
            k: 4,
            alpha: 2,
            gamma: 0.9,
            theta: 0.2,
            beta1: 0.5,
            beta2: 0.5,
        }
    }
}

impl CfHyperparams {
    pub fn validate(&self) -> Result<(), CfError> {
        if self.k == 0 {
            return Err(CfError::InvalidHyperparams("k must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(CfError::InvalidHyperparams(format!(
                "gamma {} outside (0, 1)",
                self.gamma
            )));
        }
        if ![self.theta, self.beta1, self.beta2].iter().all(|x| x.is_finite()) {
            return Err(CfError::InvalidHyperparams("non-finite weight".into()));
        }
        Ok(())
    }
}

/// Ranks of one listing in the shown and counterfactual lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionPair {
    pub r_shown: u32,
    pub r_cf: u32,
    /// The counterfactual list lacks the listing; `r_cf` is then its length plus one.
    pub missing_in_cf: bool,
}

impl PositionPair {
    pub fn new(r_shown: u32, r_cf: u32) -> Self {
        Self {
            r_shown,
            r_cf,
            missing_in_cf: false,
        }
    }

    pub fn rank_gap(&self) -> u32 {
        self.r_shown.abs_diff(self.r_cf)
    }
}

pub fn locate_positions(listing: ListingId, shown: &RankedList, cf: &RankedList) -> Result<PositionPair, CfError> {
    let r_shown = shown.rank_of(listing).ok_or(CfError::NotShown(listing))? as u32;
    Ok(match cf.rank_of(listing) {
        Some(r) => PositionPair::new(r_shown, r as u32),
        None => PositionPair {
            r_shown,
            r_cf: cf.len() as u32 + 1,
            missing_in_cf: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Bucket {
    Sim,
    Diff,
    Neither,
}

/// Similar: both ranks within the top k and at most alpha apart. Different:
/// more than alpha apart. Anything else falls in neither bucket.
pub fn decompose(p: &PositionPair, h: &CfHyperparams) -> Bucket {
    let gap = p.rank_gap();
    if gap > h.alpha {
        Bucket::Diff
    } else if p.r_shown <= h.k && p.r_cf <= h.k {
        Bucket::Sim
    } else {
        Bucket::Neither
    }
}

pub fn gain(p: &PositionPair, h: &CfHyperparams) -> f64 {
    let excess = p.rank_gap().saturating_sub(h.alpha);
    1.0 - h.gamma.powi(excess as i32)
}

/// `(g, 0)` when the shown ranker placed the listing more than alpha ranks
/// higher, `(0, g)` when the counterfactual did, `(0, 0)` otherwise.
pub fn win_loss(p: &PositionPair, h: &CfHyperparams) -> (f64, f64) {
    let alpha = h.alpha as i64;
    let (shown, cf) = (p.r_shown as i64, p.r_cf as i64);
    if cf - shown - alpha > 0 {
        (gain(p, h), 0.0)
    } else if shown - cf - alpha > 0 {
        (0.0, gain(p, h))
    } else {
        (0.0, 0.0)
    }
}

/// Counterfactual outcomes of one user, summed over attributed bookings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCfAggregate {
    pub user: UserId,
    pub shown_ranker: RankerLabel,
    pub y_sim: f64,
    pub y_diff: f64,
    pub sum_win: f64,
    pub sum_loss: f64,
}

impl UserCfAggregate {
    pub fn new(user: UserId, shown_ranker: RankerLabel) -> Self {
        Self {
            user,
            shown_ranker,
            y_sim: 0.0,
            y_diff: 0.0,
            sum_win: 0.0,
            sum_loss: 0.0,
        }
    }

    pub fn add(&mut self, p: &PositionPair, h: &CfHyperparams) {
        match decompose(p, h) {
            Bucket::Sim => self.y_sim += 1.0,
            Bucket::Diff => self.y_diff += 1.0,
            Bucket::Neither => {}
        }
        let (win, loss) = win_loss(p, h);
        self.sum_win += win;
        self.sum_loss += loss;
    }

    pub fn decomp_outcome(&self, h: &CfHyperparams) -> f64 {
        self.y_diff + h.theta * self.y_sim
    }

    pub fn oec_outcome(&self, h: &CfHyperparams) -> f64 {
        h.beta1 * self.decomp_outcome(h) + h.beta2 * self.sum_win
    }
}

/// User-level aggregates of one counterfactual experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfSample {
    pub experiment: String,
    pub users: Vec<UserCfAggregate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CfAggregation {
    pub missing_in_cf: u64,
    pub skipped: Vec<String>,
}

/// Builds per-user aggregates from counterfactual exposures and attributed bookings.
///
/// Every user with a counterfactual exposure appears, with zeros when they
/// have no bookings.
pub fn aggregate_users(
    experiment: &str,
    exposures: &[ExposureRecord],
    attributed: &[AttributedEvent<'_>],
    h: &CfHyperparams,
) -> Result<(CfSample, CfAggregation), CfError> {
    let mut users: BTreeMap<UserId, UserCfAggregate> = BTreeMap::new();
    for e in exposures.iter().filter(|e| e.mode == Mode::Counterfactual) {
        let Some(w) = e.shown_ranker else { continue };
        let agg = users.entry(e.user).or_insert_with(|| UserCfAggregate::new(e.user, w));
        if agg.shown_ranker != w {
            return Err(CfError::InconsistentShownRanker(e.user));
        }
    }
    let mut diag = CfAggregation::default();
    for pair in attributed.iter().filter(|p| p.event.kind == EventKind::Booking) {
        let e = pair.exposure;
        let (Mode::Counterfactual, Some(w)) = (e.mode, e.shown_ranker) else {
            diag.skipped
                .push(format!("booking attributed to non-counterfactual search {}", e.search));
            continue;
        };
        let p = locate_positions(pair.event.listing, e.list(w), e.list(w.other()))?;
        if p.missing_in_cf {
            diag.missing_in_cf += 1;
        }
        users
            .entry(e.user)
            .or_insert_with(|| UserCfAggregate::new(e.user, w))
            .add(&p, h);
    }
    Ok((
        CfSample {
            experiment: experiment.to_string(),
            users: users.into_values().collect(),
        },
        diag,
    ))
}

/// Treatment-shown and control-shown summaries of a user-level outcome.
fn split<F: Fn(&UserCfAggregate) -> f64>(sample: &CfSample, f: F) -> Result<(SampleSummary, SampleSummary), CfError> {
    let mut t = SampleSummary::default();
    let mut c = SampleSummary::default();
    for u in &sample.users {
        match u.shown_ranker {
            RankerLabel::Treatment => t.push(f(u)),
            RankerLabel::Control => c.push(f(u)),
        }
    }
    if t.n == 0 {
        return Err(CfError::EmptyGroup(RankerLabel::Treatment));
    }
    if c.n == 0 {
        return Err(CfError::EmptyGroup(RankerLabel::Control));
    }
    Ok((t, c))
}

/// Estimate whose point value is the user-level mean difference.
pub(crate) fn mean_difference_report(
    name: &str,
    experiment: &str,
    t: &SampleSummary,
    c: &SampleSummary,
) -> EstimateReport {
    let welch = welch_from_summaries(t, c).ok();
    let tau = t.mean - c.mean;
    EstimateReport {
        metric_name: name.to_string(),
        experiment: experiment.to_string(),
        tau_hat: tau,
        baseline_mean: c.mean,
        percent_delta: (c.mean != 0.0).then(|| tau / c.mean),
        p_value: welch.map_or(1.0, |w| w.p_value),
        n_units: t.n + c.n,
        variance: welch.map(|w| w.std_error * w.std_error),
    }
}

/// Estimate whose point value is `(sum_T - sum_C) / N` over all users.
pub(crate) fn total_difference_report(
    name: &str,
    experiment: &str,
    t: &SampleSummary,
    c: &SampleSummary,
) -> EstimateReport {
    let welch = welch_from_summaries(t, c).ok();
    let n = (t.n + c.n) as f64;
    let tau = (t.sum() - c.sum()) / n;
    let variance = welch.map(|_| (t.n as f64 * t.variance() + c.n as f64 * c.variance()) / (n * n));
    EstimateReport {
        metric_name: name.to_string(),
        experiment: experiment.to_string(),
        tau_hat: tau,
        baseline_mean: c.mean,
        percent_delta: (c.mean != 0.0).then(|| tau / c.mean),
        p_value: welch.map_or(1.0, |w| w.p_value),
        n_units: t.n + c.n,
        variance,
    }
}

pub fn tau_diff(sample: &CfSample) -> Result<EstimateReport, CfError> {
    let (t, c) = split(sample, |u| u.y_diff)?;
    Ok(mean_difference_report("tau_diff", &sample.experiment, &t, &c))
}

pub fn tau_sim(sample: &CfSample) -> Result<EstimateReport, CfError> {
    let (t, c) = split(sample, |u| u.y_sim)?;
    Ok(mean_difference_report("tau_sim", &sample.experiment, &t, &c))
}

/// `tau_diff + theta * tau_sim`, tested on the user-level composite.
pub fn tau_decomp(sample: &CfSample, h: &CfHyperparams) -> Result<EstimateReport, CfError> {
    let (t, c) = split(sample, |u| u.decomp_outcome(h))?;
    Ok(mean_difference_report("tau_decomp", &sample.experiment, &t, &c))
}

/// Difference of total wins between treatment-shown and control-shown users, over all users.
pub fn tau_g(sample: &CfSample, _h: &CfHyperparams) -> Result<EstimateReport, CfError> {
    // The win indicator is redundant with sum_win >= 0; kept as written.
    let (t, c) = split(sample, |u| if u.sum_win > 0.0 { u.sum_win } else { 0.0 })?;
    Ok(total_difference_report("tau_g", &sample.experiment, &t, &c))
}

pub fn tau_win_loss(sample: &CfSample, _h: &CfHyperparams) -> Result<EstimateReport, CfError> {
    let (t, c) = split(sample, |u| u.sum_win - u.sum_loss)?;
    Ok(total_difference_report("tau_win_loss", &sample.experiment, &t, &c))
}

/// `beta1 * tau_decomp + beta2 * tau_g`; significance from the composite
/// user-level outcome `beta1 * (y_diff + theta * y_sim) + beta2 * sum_win`.
pub fn tau_oec(
    decomp: &EstimateReport,
    g: &EstimateReport,
    sample: &CfSample,
    h: &CfHyperparams,
) -> Result<EstimateReport, CfError> {
    for r in [decomp, g] {
        if r.experiment != sample.experiment {
            return Err(CfError::ExperimentMismatch(
                r.experiment.clone(),
                sample.experiment.clone(),
            ));
        }
    }
    let (t, c) = split(sample, |u| u.oec_outcome(h))?;
    let mut report = mean_difference_report("tau_oec", &sample.experiment, &t, &c);
    report.tau_hat = h.beta1 * decomp.tau_hat + h.beta2 * g.tau_hat;
    report.percent_delta = (c.mean != 0.0).then(|| report.tau_hat / c.mean);
    Ok(report)
}

/// All six estimates in the order decomp, diff, sim, g, win_loss, oec.
pub fn estimate_all(sample: &CfSample, h: &CfHyperparams) -> Result<Vec<EstimateReport>, CfError> {
    let mut tally = CfTally::default();
    sample.users.iter().for_each(|u| tally.push(u, h));
    tally.reports(&sample.experiment, h)
}

/// Mergeable per-group summaries of every user-level counterfactual outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CfTally {
    /// `[outcome][group]` with group 0 = control-shown; outcomes are
    /// decomp, y_diff, y_sim, gain wins, win minus loss, and the OEC composite.
    pub summaries: [[SampleSummary; 2]; 6],
}

impl CfTally {
    pub fn push(&mut self, u: &UserCfAggregate, h: &CfHyperparams) {
        let g = match u.shown_ranker {
            RankerLabel::Control => 0,
            RankerLabel::Treatment => 1,
        };
        let values = [
            u.decomp_outcome(h),
            u.y_diff,
            u.y_sim,
            u.sum_win.max(0.0),
            u.sum_win - u.sum_loss,
            u.oec_outcome(h),
        ];
        for (s, v) in self.summaries.iter_mut().zip(values) {
            s[g].push(v);
        }
    }

    pub fn merge(&mut self, other: &CfTally) {
        for (a, b) in self.summaries.iter_mut().zip(&other.summaries) {
            a[0].merge(&b[0]);
            a[1].merge(&b[1]);
        }
    }

    pub fn reports(&self, experiment: &str, h: &CfHyperparams) -> Result<Vec<EstimateReport>, CfError> {
        let [c, t] = &self.summaries[0];
        if t.n == 0 {
            return Err(CfError::EmptyGroup(RankerLabel::Treatment));
        }
        if c.n == 0 {
            return Err(CfError::EmptyGroup(RankerLabel::Control));
        }
        let mean = |i: usize, name: &str| {
            let [c, t] = &self.summaries[i];
            mean_difference_report(name, experiment, t, c)
        };
        let total = |i: usize, name: &str| {
            let [c, t] = &self.summaries[i];
            total_difference_report(name, experiment, t, c)
        };
        let decomp = mean(0, "tau_decomp");
        let g = total(3, "tau_g");
        let mut oec = mean(5, "tau_oec");
        oec.tau_hat = h.beta1 * decomp.tau_hat + h.beta2 * g.tau_hat;
        oec.percent_delta = (oec.baseline_mean != 0.0).then(|| oec.tau_hat / oec.baseline_mean);
        Ok(vec![
            decomp,
            mean(1, "tau_diff"),
            mean(2, "tau_sim"),
            g,
            total(4, "tau_win_loss"),
            oec,
        ])
    }
}
