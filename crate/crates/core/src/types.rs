//! Domain types shared across the crate and the line-delimited log schema.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Version written into every log line.
pub const SCHEMA_VERSION: u32 = 1;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u64> for $name {
            fn from(v: u64) -> Self {
                Self(v)
            }
        }
    };
}

id_newtype!(
    /// Opaque listing identifier, unique within a catalog.
    ListingId
);
id_newtype!(UserId);
id_newtype!(SearchId);

/// Experiment identifier. Seeds the per-user and per-search coins.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExperimentId(pub String);

impl ExperimentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Traffic slot hosting one online-evaluation experiment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaneId(pub String);

impl LaneId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }
}

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RankerLabel {
    Control,
    Treatment,
}

impl RankerLabel {
    /// The other ranker of the pair.
    pub fn other(self) -> Self {
        match self {
            RankerLabel::Control => RankerLabel::Treatment,
            RankerLabel::Treatment => RankerLabel::Control,
        }
    }
}

impl fmt::Display for RankerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankerLabel::Control => f.write_str("CONTROL"),
            RankerLabel::Treatment => f.write_str("TREATMENT"),
        }
    }
}

/// One ranker's ordered output for one search. Index `i` holds rank `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub ranker: RankerLabel,
    pub items: Vec<ListingId>,
    pub search: SearchId,
}

impl RankedList {
    pub fn new(ranker: RankerLabel, search: SearchId, items: Vec<ListingId>) -> Self {
        Self { ranker, items, search }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// 1-based rank of `listing`, if present.
    pub fn rank_of(&self, listing: ListingId) -> Option<usize> {
        self.items.iter().position(|&x| x == listing).map(|i| i + 1)
    }

    /// First listing that occurs more than once, if any.
    pub fn first_duplicate(&self) -> Option<ListingId> {
        first_duplicate(&self.items)
    }
}

pub(crate) fn first_duplicate(items: &[ListingId]) -> Option<ListingId> {
    let mut seen = std::collections::HashSet::with_capacity(items.len());
    items.iter().copied().find(|x| !seen.insert(*x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterleavedEntry {
    pub listing: ListingId,
    /// Team that drafted the entry; `None` when both rankers drafted it in the same turn.
    pub team: Option<RankerLabel>,
}

/// The merged list actually shown in interleaving mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterleavedList {
    pub entries: Vec<InterleavedEntry>,
    pub is_c_first: bool,
    pub search: SearchId,
}

impl InterleavedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn listings(&self) -> impl Iterator<Item = ListingId> + '_ {
        self.entries.iter().map(|e| e.listing)
    }

    /// Position (0-based) and entry for `listing`.
    pub fn find(&self, listing: ListingId) -> Option<(usize, &InterleavedEntry)> {
        self.entries.iter().enumerate().find(|(_, e)| e.listing == listing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "AB")]
    Ab,
    #[serde(rename = "INTERLEAVING")]
    Interleaving,
    #[serde(rename = "COUNTERFACTUAL")]
    Counterfactual,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ab => "AB",
            Mode::Interleaving => "INTERLEAVING",
            Mode::Counterfactual => "COUNTERFACTUAL",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AB" | "A/B" => Ok(Mode::Ab),
            "INTERLEAVING" => Ok(Mode::Interleaving),
            "COUNTERFACTUAL" | "CF" => Ok(Mode::Counterfactual),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// What was generated and shown for one search.
///
/// In AB mode only the shown ranker's list is logged; the other list has no
/// items. Counterfactual mode logs both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub schema_version: u32,
    pub search: SearchId,
    pub user: UserId,
    pub timestamp: u64,
    pub lane: LaneId,
    pub mode: Mode,
    pub shown_ranker: Option<RankerLabel>,
    pub list_control: RankedList,
    pub list_treatment: RankedList,
    pub interleaved: Option<InterleavedList>,
}

impl ExposureRecord {
    pub fn list(&self, ranker: RankerLabel) -> &RankedList {
        match ranker {
            RankerLabel::Control => &self.list_control,
            RankerLabel::Treatment => &self.list_treatment,
        }
    }

    /// Listings in the order the user saw them.
    pub fn shown_items(&self) -> Vec<ListingId> {
        match (&self.interleaved, self.shown_ranker) {
            (Some(il), _) if self.mode == Mode::Interleaving => il.listings().collect(),
            (_, Some(w)) => self.list(w).items.clone(),
            _ => Vec::new(),
        }
    }

    /// 1-based rank of `listing` in the shown list.
    pub fn shown_rank(&self, listing: ListingId) -> Option<usize> {
        match (&self.interleaved, self.shown_ranker) {
            (Some(il), _) if self.mode == Mode::Interleaving => il.find(listing).map(|(i, _)| i + 1),
            (_, Some(w)) => self.list(w).rank_of(listing),
            _ => None,
        }
    }

    /// Mode/field consistency: interleaving carries a merged list and no shown
    /// ranker; AB and counterfactual carry a shown ranker.
    pub fn consistency_issue(&self) -> Option<String> {
        match self.mode {
            Mode::Interleaving if self.interleaved.is_none() => {
                Some("INTERLEAVING exposure without interleaved list".into())
            }
            Mode::Interleaving if self.shown_ranker.is_some() => {
                Some("INTERLEAVING exposure with shown_ranker set".into())
            }
            Mode::Ab | Mode::Counterfactual if self.shown_ranker.is_none() => {
                Some(format!("{} exposure without shown_ranker", self.mode))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Click,
    Booking,
}

/// A user action on a listing shown in a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub schema_version: u32,
    pub user: UserId,
    pub search: SearchId,
    pub listing: ListingId,
    pub kind: EventKind,
    pub timestamp: u64,
}

impl EventRecord {
    pub fn new(user: UserId, search: SearchId, listing: ListingId, kind: EventKind, timestamp: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            user,
            search,
            listing,
            kind,
            timestamp,
        }
    }
}

/// Point estimate with its significance, for any metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub metric_name: String,
    /// Experiment the estimate was computed for.
    pub experiment: String,
    pub tau_hat: f64,
    pub baseline_mean: f64,
    /// `tau_hat / baseline_mean`; `None` when the baseline is zero.
    pub percent_delta: Option<f64>,
    pub p_value: f64,
    pub n_units: u64,
    /// Sampling variance of `tau_hat`; `None` when a group is too small to estimate it.
    pub variance: Option<f64>,
}

impl EstimateReport {
    pub fn std_error(&self) -> Option<f64> {
        self.variance.map(f64::sqrt)
    }

    pub fn is_significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}
