use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Sequences;
use crate::model::{make_query, CountryCode, EntityId, EventHistory, EventQuad, ForecastQuery};

/// Turns target events into queries whose history is the earlier part of
/// the event's sequence, truncated to the `history_limit` most recent events.
pub fn build_queries(targets: &[EventQuad], sequences: &Sequences, history_limit: usize) -> Vec<ForecastQuery> {
    targets
        .iter()
        .map(|e| {
            let history = sequences
                .group_of(&e.event_id)
                .map(|g| g.before(e.timestamp, history_limit))
                .unwrap_or_else(EventHistory::empty);
            make_query(e, history).expect("history is strictly prior by construction")
        })
        .collect()
}

/// Candidate objects per country: every object observed in that country.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePools {
    pub by_country: BTreeMap<CountryCode, Vec<EntityId>>,
    pub global: Vec<EntityId>,
}

impl CandidatePools {
    pub fn from_events(events: &[EventQuad]) -> Self {
        let mut by_country: BTreeMap<CountryCode, BTreeSet<EntityId>> = BTreeMap::new();
        let mut global = BTreeSet::new();
        for e in events {
            by_country.entry(e.country.clone()).or_default().insert(e.object.clone());
            global.insert(e.object.clone());
        }
        CandidatePools {
            by_country: by_country.into_iter().map(|(c, s)| (c, s.into_iter().collect())).collect(),
            global: global.into_iter().collect(),
        }
    }

    /// The country's pool, or the global pool for unseen countries.
    pub fn pool(&self, country: &CountryCode) -> &[EntityId] {
        self.by_country.get(country).map(Vec::as_slice).unwrap_or(&self.global)
    }
}
