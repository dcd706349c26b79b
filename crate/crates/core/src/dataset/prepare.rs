use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{
    build_queries, deduplicate, form_sequences, partition_by_country, split_by_cutoff, CandidatePools, EntityRegistry,
    EventStore,
};
use crate::model::{CountryCode, EventQuad, ForecastQuery};

/// Train/test events and queries derived from an event store.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train_events: Vec<EventQuad>,
    pub test_events: Vec<EventQuad>,
    pub train: Vec<ForecastQuery>,
    pub test: Vec<ForecastQuery>,
    /// Candidate objects, drawn from training events only.
    pub pools: CandidatePools,
    pub registry: EntityRegistry,
    pub summary: PrepareSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub input_events: usize,
    pub rejected_records: usize,
    pub duplicates_removed: usize,
    pub out_of_scope: usize,
    pub cutoff: NaiveDate,
    pub window_days: u32,
    pub history_limit: usize,
    pub sequence_groups: usize,
    pub countries: Vec<CountryCode>,
    pub train_events: usize,
    pub test_events: usize,
    /// `[train, test]` event counts per country.
    pub per_country: BTreeMap<CountryCode, [usize; 2]>,
}

/// De-duplicates, partitions to `countries`, forms sequences over the
/// partitioned events, splits at `cutoff` and turns both sides into queries
/// sorted by query id.
pub fn prepare_dataset(
    store: &EventStore,
    countries: &[CountryCode],
    cutoff: NaiveDate,
    window_days: u32,
    history_limit: usize,
) -> PreparedData {
    let clean = deduplicate(store);
    let partition = partition_by_country(&clean.events, countries);
    let events: Vec<_> = partition.by_country.values().flatten().cloned().collect();
    let sequences = form_sequences(&events, window_days);
    let split = split_by_cutoff(&events, cutoff);
    let mut train = build_queries(&split.train, &sequences, history_limit);
    let mut test = build_queries(&split.test, &sequences, history_limit);
    let by_id = |a: &ForecastQuery, b: &ForecastQuery| a.query_id.cmp(&b.query_id);
    train.sort_by(by_id);
    test.sort_by(by_id);

    let mut per_country: BTreeMap<CountryCode, [usize; 2]> = BTreeMap::new();
    for e in &split.train {
        per_country.entry(e.country.clone()).or_default()[0] += 1;
    }
    for e in &split.test {
        per_country.entry(e.country.clone()).or_default()[1] += 1;
    }
    let summary = PrepareSummary {
        input_events: store.events.len(),
        rejected_records: store.rejects.len(),
        duplicates_removed: store.events.len() - clean.events.len(),
        out_of_scope: partition.out_of_scope.len(),
        cutoff,
        window_days,
        history_limit,
        sequence_groups: sequences.len(),
        countries: partition.selected_countries,
        train_events: split.train.len(),
        test_events: split.test.len(),
        per_country,
    };
    PreparedData {
        pools: CandidatePools::from_events(&split.train),
        registry: clean.entity_registry,
        train_events: split.train,
        test_events: split.test,
        train,
        test,
        summary,
    }
}
