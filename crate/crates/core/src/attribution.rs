//! Mapping user events back to the impressions that may have caused them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{EventKind, EventRecord, ExposureRecord, ListingId, SearchId, UserId};

/// Which earlier impressions of a booked listing receive the booking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AttributionWindow {
    /// Every impression of the listing to the user during the experiment.
    #[default]
    AllInPeriod,
    /// The latest impression at or before the booking.
    LastSearch,
    /// Impressions at or before the booking and at most `n` ticks older.
    LastNTicks(u64),
}

impl AttributionWindow {
    pub fn validate(&self) -> Result<(), AttributionError> {
        match self {
            AttributionWindow::LastNTicks(0) => Err(AttributionError::EmptyWindow),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttributionError {
    #[error("event by user {user} references unknown search {search}")]
    UnknownSearch { user: UserId, search: SearchId },
    #[error("event on listing {listing} not shown in search {search}")]
    ListingNotShown { listing: ListingId, search: SearchId },
    #[error("event by user {event_user} on search {search} which was shown to user {exposure_user}")]
    UserMismatch {
        event_user: UserId,
        exposure_user: UserId,
        search: SearchId,
    },
    #[error("LAST_N_TICKS window must be positive")]
    EmptyWindow,
}

/// An event paired with one exposure it is credited to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributedEvent<'a> {
    pub event: EventRecord,
    pub exposure: &'a ExposureRecord,
}

#[derive(Debug, Clone, Default)]
pub struct Attribution<'a> {
    pub pairs: Vec<AttributedEvent<'a>>,
    /// Bookings with no impression of the listing inside the window.
    pub dropped_bookings: u64,
}

/// Pairs each event with the exposures it is attributed to.
///
/// Clicks pair with the exposure of the search they happened on. Bookings pair
/// with every exposure of the booked listing to the same user that the window
/// admits. Output is sorted by user, event time and search, then by exposure
/// time, so it depends only on the multiset of input records.
pub fn attribute_events<'a>(
    events: &[EventRecord],
    exposures: &'a [ExposureRecord],
    window: AttributionWindow,
) -> Result<Attribution<'a>, AttributionError> {
    window.validate()?;
    let mut by_search: HashMap<SearchId, &'a ExposureRecord> = HashMap::with_capacity(exposures.len());
    let mut by_user: HashMap<UserId, Vec<&'a ExposureRecord>> = HashMap::new();
    for e in exposures {
        by_search.entry(e.search).or_insert(e);
        by_user.entry(e.user).or_default().push(e);
    }
    for list in by_user.values_mut() {
        list.sort_by_key(|e| (e.timestamp, e.search));
    }

    let mut out = Attribution::default();
    for ev in events {
        let origin = *by_search.get(&ev.search).ok_or(AttributionError::UnknownSearch {
            user: ev.user,
            search: ev.search,
        })?;
        if origin.user != ev.user {
            return Err(AttributionError::UserMismatch {
                event_user: ev.user,
                exposure_user: origin.user,
                search: ev.search,
            });
        }
        if origin.shown_rank(ev.listing).is_none() {
            return Err(AttributionError::ListingNotShown {
                listing: ev.listing,
                search: ev.search,
            });
        }
        match ev.kind {
            EventKind::Click => out.pairs.push(AttributedEvent {
                event: *ev,
                exposure: origin,
            }),
            EventKind::Booking => {
                let history = by_user.get(&ev.user).map(Vec::as_slice).unwrap_or(&[]);
                let before = out.pairs.len();
                let showing = history.iter().copied().filter(|x| x.shown_rank(ev.listing).is_some());
                match window {
                    AttributionWindow::AllInPeriod => {
                        out.pairs
                            .extend(showing.map(|exposure| AttributedEvent { event: *ev, exposure }));
                    }
                    AttributionWindow::LastSearch => {
                        if let Some(exposure) = showing.rev().find(|x| x.timestamp <= ev.timestamp) {
                            out.pairs.push(AttributedEvent { event: *ev, exposure });
                        }
                    }
                    AttributionWindow::LastNTicks(n) => {
                        out.pairs.extend(
                            showing
                                .filter(|x| x.timestamp <= ev.timestamp && ev.timestamp - x.timestamp <= n)
                                .map(|exposure| AttributedEvent { event: *ev, exposure }),
                        );
                    }
                }
                if out.pairs.len() == before {
                    out.dropped_bookings += 1;
                }
            }
        }
    }
    out.pairs.sort_by_key(sort_key);
    Ok(out)
}

type PairKey = (UserId, u64, SearchId, EventKind, ListingId, u64, SearchId);

fn sort_key(p: &AttributedEvent<'_>) -> PairKey {
    (
        p.event.user,
        p.event.timestamp,
        p.event.search,
        p.event.kind,
        p.event.listing,
        p.exposure.timestamp,
        p.exposure.search,
    )
}
