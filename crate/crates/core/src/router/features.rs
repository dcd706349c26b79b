use std::collections::BTreeMap;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::hashing::fnv1a;
use crate::model::ForecastQuery;

pub const DEFAULT_DIM: usize = 65_536;
pub const DEFAULT_HORIZON: usize = 10;
pub const HISTORY_DECAY: f64 = 0.95;

/// Sparse vector over a hashed feature space, sorted by index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<(u32, f64)>);

impl FeatureVector {
    pub fn from_map(map: BTreeMap<u32, f64>) -> Self {
        FeatureVector(map.into_iter().collect())
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.0.iter().map(|&(i, x)| dense[i as usize] * x).sum()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.0.last().map(|(i, _)| *i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub dim: usize,
    pub horizon: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { dim: DEFAULT_DIM, horizon: DEFAULT_HORIZON }
    }
}

/// Named features before hashing.
///
/// Query-level families carry weight 1; the subject and object of the j-th
/// most recent history event (j = 0 newest) carry `0.95^j`.
pub fn named_features(query: &ForecastQuery, horizon: usize) -> Vec<(String, f64)> {
    let mut out = vec![
        (format!("subj:{}", query.subject), 1.0),
        (format!("rel:{}", query.relation), 1.0),
        (format!("country:{}", query.country), 1.0),
        (format!("month:{}", query.timestamp.month()), 1.0),
    ];
    let weight = std::iter::successors(Some(1.0), |w| Some(w * HISTORY_DECAY));
    for (e, w) in query.history.events().iter().rev().take(horizon).zip(weight) {
        out.push((format!("hist_ent:{}", e.subject), w));
        out.push((format!("hist_ent:{}", e.object), w));
    }
    out
}

pub fn feature_index(name: &str, dim: usize) -> u32 {
    (fnv1a(name.as_bytes()) % dim as u64) as u32
}

/// Hashes the named features into `config.dim` buckets, summing collisions.
pub fn featurize(query: &ForecastQuery, config: FeatureConfig) -> FeatureVector {
    let mut map = BTreeMap::new();
    for (name, w) in named_features(query, config.horizon) {
        *map.entry(feature_index(&name, config.dim)).or_insert(0.0) += w;
    }
    FeatureVector::from_map(map)
}
