//! Competitive-pair team drafting and its credit attribution.
//!
//! Each turn drafts the next available item from both lists. Two distinct
//! items form a competitive pair, appended in coin order with team tags; a
//! shared item is appended once without a tag. The merged list has length
//! `min(len(C), len(T))`, so a terminal pair may contribute only its first
//! member. Credit and the data-quality metrics look at tagged entries only.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::AttributedEvent;
use crate::stats::{two_proportion_test, welch_from_summaries, SampleSummary};
use crate::types::{
    EstimateReport, EventKind, ExposureRecord, InterleavedEntry, InterleavedList, ListingId, Mode, RankedList,
    RankerLabel, UserId,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterleaveError {
    #[error("{ranker} list repeats listing {listing}")]
    DuplicateItem { ranker: RankerLabel, listing: ListingId },
    #[error("control and treatment lists belong to different searches")]
    SearchMismatch,
    #[error("no users to compute a preference over")]
    NoUsers,
    #[error("no interleaving exposures in log")]
    NoInterleavingExposures,
}

/// Smallest index greater than `from` whose item is not yet merged.
pub fn next_available(items: &[ListingId], from: usize, merged: &[InterleavedEntry]) -> Option<usize> {
    (from + 1..items.len()).find(|&i| !merged.iter().any(|e| e.listing == items[i]))
}

/// Merges control and treatment lists by competitive-pair team drafting.
pub fn interleave(
    control: &RankedList,
    treatment: &RankedList,
    is_c_first: bool,
) -> Result<InterleavedList, InterleaveError> {
    if control.search != treatment.search {
        return Err(InterleaveError::SearchMismatch);
    }
    for list in [control, treatment] {
        if let Some(listing) = list.first_duplicate() {
            return Err(InterleaveError::DuplicateItem {
                ranker: list.ranker,
                listing,
            });
        }
    }
    Ok(InterleavedList {
        entries: draft(&control.items, &treatment.items, is_c_first),
        is_c_first,
        search: control.search,
    })
}

/// Drafting loop over raw item slices; inputs must be duplicate-free.
pub(crate) fn draft(c: &[ListingId], t: &[ListingId], is_c_first: bool) -> Vec<InterleavedEntry> {
    let target = c.len().min(t.len());
    let mut merged: Vec<InterleavedEntry> = Vec::with_capacity(target + 1);
    let (mut kc, mut kt) = (Some(0usize), Some(0usize));
    while let (Some(ic), Some(it)) = (kc, kt) {
        if ic >= c.len() || it >= t.len() || merged.len() >= target {
            break;
        }
        if c[ic] != t[it] {
            let from_c = InterleavedEntry {
                listing: c[ic],
                team: Some(RankerLabel::Control),
            };
            let from_t = InterleavedEntry {
                listing: t[it],
                team: Some(RankerLabel::Treatment),
            };
            if is_c_first {
                merged.extend([from_c, from_t]);
            } else {
                merged.extend([from_t, from_c]);
            }
        } else {
            merged.push(InterleavedEntry {
                listing: c[ic],
                team: None,
            });
        }
        kc = next_available(c, ic, &merged);
        kt = next_available(t, it, &merged);
    }
    merged.truncate(target);
    merged
}

/// Wins of each team for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCredit {
    pub user: UserId,
    pub wins_c: u64,
    pub wins_t: u64,
}

impl PairCredit {
    pub fn new(user: UserId) -> Self {
        Self {
            user,
            wins_c: 0,
            wins_t: 0,
        }
    }

    /// `wins(T) - wins(C)`.
    pub fn preference(&self) -> i64 {
        self.wins_t as i64 - self.wins_c as i64
    }

    pub fn merge(&mut self, other: &PairCredit) {
        self.wins_c += other.wins_c;
        self.wins_t += other.wins_t;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CreditTally {
    /// One entry per user with an interleaving exposure, sorted by user.
    pub credits: Vec<PairCredit>,
    pub skipped: Vec<String>,
}

/// Counts team wins from attributed events of `kind`.
///
/// Every user with an interleaving exposure gets a credit entry, so users
/// without events count as ties.
pub fn credit_events(exposures: &[ExposureRecord], attributed: &[AttributedEvent<'_>], kind: EventKind) -> CreditTally {
    let mut credits: BTreeMap<UserId, PairCredit> = BTreeMap::new();
    for e in exposures.iter().filter(|e| e.mode == Mode::Interleaving) {
        credits.entry(e.user).or_insert_with(|| PairCredit::new(e.user));
    }
    let mut skipped = Vec::new();
    for pair in attributed.iter().filter(|p| p.event.kind == kind) {
        let Some(il) = pair
            .exposure
            .interleaved
            .as_ref()
            .filter(|_| pair.exposure.mode == Mode::Interleaving)
        else {
            skipped.push(format!(
                "event on listing {} attributed to non-interleaving search {}",
                pair.event.listing, pair.exposure.search
            ));
            continue;
        };
        let Some((_, entry)) = il.find(pair.event.listing) else {
            skipped.push(format!(
                "listing {} not in interleaved list of search {}",
                pair.event.listing, pair.exposure.search
            ));
            continue;
        };
        let credit = credits
            .entry(pair.event.user)
            .or_insert_with(|| PairCredit::new(pair.event.user));
        match entry.team {
            Some(RankerLabel::Control) => credit.wins_c += 1,
            Some(RankerLabel::Treatment) => credit.wins_t += 1,
            None => {}
        }
    }
    CreditTally {
        credits: credits.into_values().collect(),
        skipped,
    }
}

/// Mergeable counts of user-level preferences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceTally {
    pub n_prefer_t: u64,
    pub n_prefer_c: u64,
    pub n_tied: u64,
}

impl PreferenceTally {
    pub fn push(&mut self, credit: &PairCredit) {
        match credit.preference() {
            p if p > 0 => self.n_prefer_t += 1,
            p if p < 0 => self.n_prefer_c += 1,
            _ => self.n_tied += 1,
        }
    }

    pub fn merge(&mut self, other: &PreferenceTally) {
        self.n_prefer_t += other.n_prefer_t;
        self.n_prefer_c += other.n_prefer_c;
        self.n_tied += other.n_tied;
    }

    pub fn n_users(&self) -> u64 {
        self.n_prefer_t + self.n_prefer_c + self.n_tied
    }

    pub fn result(&self) -> Result<PreferenceResult, InterleaveError> {
        let n = self.n_users();
        if n == 0 {
            return Err(InterleaveError::NoUsers);
        }
        let decided = self.n_prefer_t + self.n_prefer_c;
        Ok(PreferenceResult {
            tau_pref: (self.n_prefer_t as f64 - self.n_prefer_c as f64) / n as f64,
            n_prefer_t: self.n_prefer_t,
            n_prefer_c: self.n_prefer_c,
            n_tied: self.n_tied,
            n_users: n,
            p_value: two_proportion_test(self.n_prefer_t, decided, 0.5),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceResult {
    pub tau_pref: f64,
    pub n_prefer_t: u64,
    pub n_prefer_c: u64,
    pub n_tied: u64,
    pub n_users: u64,
    pub p_value: f64,
}

/// Share of users preferring T minus share preferring C, over all users
/// including ties, with a two-sided proportion test on the decided users.
pub fn preference_stat(credits: &[PairCredit]) -> Result<PreferenceResult, InterleaveError> {
    let mut tally = PreferenceTally::default();
    credits.iter().for_each(|c| tally.push(c));
    tally.result()
}

/// Data-quality metrics, each as a T-vs-C comparison of user-level values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub listings_shown: EstimateReport,
    pub shown_first: EstimateReport,
    pub shown_reciprocal_rank: EstimateReport,
    pub listings_found: EstimateReport,
}

impl QualityReport {
    pub fn metrics(&self) -> [&EstimateReport; 4] {
        [
            &self.listings_shown,
            &self.shown_first,
            &self.shown_reciprocal_rank,
            &self.listings_found,
        ]
    }
}

pub const QUALITY_METRICS: [&str; 4] = [
    "listings_shown",
    "shown_first",
    "shown_reciprocal_rank",
    "listings_found",
];

/// One user's per-team quality values, indexed `[metric][team]` with team 0 = C.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UserQuality {
    pub values: [[f64; 2]; 4],
}

fn team_index(team: RankerLabel) -> usize {
    match team {
        RankerLabel::Control => 0,
        RankerLabel::Treatment => 1,
    }
}

impl UserQuality {
    /// Adds one shown interleaved list.
    pub fn add_list(&mut self, il: &InterleavedList) {
        let entries = &il.entries;
        let mut i = 0;
        while i < entries.len() {
            if let Some(team) = entries[i].team {
                let t = team_index(team);
                self.values[0][t] += 1.0;
                self.values[2][t] += 1.0 / (i + 1) as f64;
                let paired = entries.get(i + 1).and_then(|e| e.team).is_some_and(|next| next != team);
                if paired {
                    let other = 1 - t;
                    self.values[0][other] += 1.0;
                    self.values[2][other] += 1.0 / (i + 2) as f64;
                    self.values[1][t] += 1.0;
                    i += 2;
                    continue;
                }
            }
            i += 1;
        }
    }

    pub fn add_found(&mut self, team: RankerLabel, count: f64) {
        self.values[3][team_index(team)] += count;
    }
}

/// Mergeable accumulator behind [`QualityReport`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityTally {
    /// `[metric][team]` summaries over users.
    pub summaries: [[SampleSummary; 2]; 4],
}

impl QualityTally {
    pub fn push(&mut self, user: &UserQuality) {
        for (m, row) in user.values.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                self.summaries[m][t].push(*v);
            }
        }
    }

    pub fn merge(&mut self, other: &QualityTally) {
        for m in 0..4 {
            for t in 0..2 {
                self.summaries[m][t].merge(&other.summaries[m][t]);
            }
        }
    }

    pub fn report(&self, experiment: &str) -> QualityReport {
        let metric = |m: usize| {
            let [c, t] = &self.summaries[m];
            let welch = welch_from_summaries(t, c).ok();
            EstimateReport {
                metric_name: QUALITY_METRICS[m].to_string(),
                experiment: experiment.to_string(),
                tau_hat: t.mean - c.mean,
                baseline_mean: c.mean,
                percent_delta: (c.mean != 0.0).then(|| (t.mean - c.mean) / c.mean),
                p_value: welch.map_or(1.0, |w| w.p_value),
                n_units: c.n,
                variance: welch.map(|w| w.std_error * w.std_error),
            }
        };
        QualityReport {
            listings_shown: metric(0),
            shown_first: metric(1),
            shown_reciprocal_rank: metric(2),
            listings_found: metric(3),
        }
    }
}

/// Quality values of every user with an interleaving exposure.
pub fn user_quality(exposures: &[ExposureRecord], attributed: &[AttributedEvent<'_>]) -> BTreeMap<UserId, UserQuality> {
    let mut users: BTreeMap<UserId, UserQuality> = BTreeMap::new();
    for e in exposures.iter().filter(|e| e.mode == Mode::Interleaving) {
        if let Some(il) = &e.interleaved {
            users.entry(e.user).or_default().add_list(il);
        }
    }
    let mut found: HashSet<(UserId, RankerLabel, ListingId)> = HashSet::new();
    for p in attributed.iter().filter(|p| p.event.kind == EventKind::Click) {
        if let Some((_, entry)) = p.exposure.interleaved.as_ref().and_then(|il| il.find(p.event.listing)) {
            if let Some(team) = entry.team {
                found.insert((p.event.user, team, p.event.listing));
            }
        }
    }
    for (user, team, _) in found {
        if let Some(q) = users.get_mut(&user) {
            q.add_found(team, 1.0);
        }
    }
    users
}

/// Per-user team balance of impressions, first positions, reciprocal ranks
/// and clicked listings, over the interleaving exposures of a log.
pub fn quality_metrics(
    exposures: &[ExposureRecord],
    attributed: &[AttributedEvent<'_>],
    experiment: &str,
) -> Result<QualityReport, InterleaveError> {
    let users = user_quality(exposures, attributed);
    if users.is_empty() {
        return Err(InterleaveError::NoInterleavingExposures);
    }
    let mut tally = QualityTally::default();
    users.values().for_each(|q| tally.push(q));
    Ok(tally.report(experiment))
}
