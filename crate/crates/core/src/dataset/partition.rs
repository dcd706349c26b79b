use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::model::{CountryCode, EventQuad};

pub const MIDDLE_EAST_COUNTRIES: [&str; 17] = [
    "IRN", "ISR", "EGY", "SAU", "TUR", "IRQ", "YEM", "SYR", "JOR", "ARE", "LBN", "OMN", "KWT", "QAT", "BHR", "CYP",
    "PSE",
];

pub const G20_COUNTRIES: [&str; 18] = [
    "CHN", "USA", "RUS", "GBR", "FRA", "DEU", "KOR", "JPN", "IND", "CAN", "ITA", "AUS", "ESP", "ARG", "BRA", "IDN",
    "MEX", "ZAF",
];

/// The 35 default countries: Middle East first, then G20.
pub fn default_countries() -> Vec<CountryCode> {
    MIDDLE_EAST_COUNTRIES
        .iter()
        .chain(G20_COUNTRIES.iter())
        .map(|c| CountryCode::new(c).expect("static codes are valid"))
        .collect()
}

/// Last day of the training period; everything after it is test data.
pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 12, 31).expect("valid date")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryPartition {
    pub by_country: BTreeMap<CountryCode, Vec<EventQuad>>,
    pub selected_countries: Vec<CountryCode>,
    pub out_of_scope: Vec<EventQuad>,
}

impl CountryPartition {
    pub fn partitioned_len(&self) -> usize {
        self.by_country.values().map(Vec::len).sum()
    }
}

pub fn partition_by_country(events: &[EventQuad], selected: &[CountryCode]) -> CountryPartition {
    let mut part = CountryPartition {
        by_country: BTreeMap::new(),
        selected_countries: selected.to_vec(),
        out_of_scope: Vec::new(),
    };
    for e in events {
        if selected.contains(&e.country) {
            part.by_country.entry(e.country.clone()).or_default().push(e.clone());
        } else {
            part.out_of_scope.push(e.clone());
        }
    }
    part
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Vec<EventQuad>,
    pub test: Vec<EventQuad>,
    pub cutoff: NaiveDate,
}

/// Train holds events on or before `cutoff`, test the ones after it.
pub fn split_by_cutoff(events: &[EventQuad], cutoff: NaiveDate) -> SplitDataset {
    let (train, test) = events.iter().cloned().partition(|e| e.timestamp <= cutoff);
    SplitDataset { train, test, cutoff }
}
