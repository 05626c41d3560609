//! Conversion metric of a plain A/B comparison.

use std::collections::BTreeMap;

use crate::counterfactual::mean_difference_report;
use crate::stats::SampleSummary;
use crate::types::{EstimateReport, EventKind, EventRecord, ExposureRecord, RankerLabel, UserId};

/// Bookings per user, treatment-shown minus control-shown.
///
/// Applies to any log whose exposures carry a shown ranker (AB and
/// counterfactual modes). Users without bookings count as zero.
pub fn conversion_delta(
    experiment: &str,
    exposures: &[ExposureRecord],
    events: &[EventRecord],
) -> Option<EstimateReport> {
    let mut users: BTreeMap<UserId, (RankerLabel, f64)> = BTreeMap::new();
    for e in exposures {
        if let Some(w) = e.shown_ranker {
            users.entry(e.user).or_insert((w, 0.0));
        }
    }
    for ev in events.iter().filter(|e| e.kind == EventKind::Booking) {
        if let Some(entry) = users.get_mut(&ev.user) {
            entry.1 += 1.0;
        }
    }
    let mut t = SampleSummary::default();
    let mut c = SampleSummary::default();
    for (w, bookings) in users.values() {
        match w {
            RankerLabel::Treatment => t.push(*bookings),
            RankerLabel::Control => c.push(*bookings),
        }
    }
    (t.n > 0 && c.n > 0).then(|| mean_difference_report("conversion", experiment, &t, &c))
}
