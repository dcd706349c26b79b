//! Seeded synthetic event corpora.
//!
//! Each country owns an entity and a relation vocabulary. A `separability`
//! fraction of each vocabulary is exclusive to the country; the remainder is
//! drawn from pools shared by all countries. Gold objects follow a
//! country-specific Zipf law over the country's entities, so country
//! identity is visible in the data.

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, EventStore};
use crate::hashing::{fnv1a, mix, rng_from};
use crate::model::{CountryCode, EntityId, EventQuad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub countries: Vec<CountryCode>,
    pub entities_per_country: usize,
    pub relations_per_country: usize,
    pub events_per_country: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Fraction of each vocabulary that is country-exclusive.
    pub separability: f64,
    #[serde(default = "default_contexts")]
    pub contexts_per_country: usize,
    /// Zipf exponent of the per-country object distribution.
    #[serde(default = "default_skew")]
    pub object_skew: f64,
}

fn default_contexts() -> usize {
    20
}

fn default_skew() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let fail = |msg: &str| Err(DatasetError::InvalidSpec(msg.to_string()));
        if self.countries.is_empty() {
            return fail("no countries");
        }
        if self.entities_per_country < 2 {
            return fail("entity vocabulary needs at least 2 entries");
        }
        if self.relations_per_country == 0 {
            return fail("empty relation vocabulary");
        }
        if self.events_per_country == 0 {
            return fail("zero events per country");
        }
        if self.contexts_per_country == 0 {
            return fail("zero contexts per country");
        }
        if !(0.0..=1.0).contains(&self.separability) {
            return fail("separability outside [0, 1]");
        }
        if !self.object_skew.is_finite() || self.object_skew < 0.0 {
            return fail("object skew must be finite and non-negative");
        }
        if self.end_date < self.start_date {
            return fail("end date before start date");
        }
        let mut codes = self.countries.clone();
        codes.sort();
        codes.dedup();
        if codes.len() != self.countries.len() {
            return fail("duplicate country");
        }
        Ok(())
    }

    fn exclusive_count(&self, size: usize) -> usize {
        ((self.separability * size as f64).round() as usize).min(size)
    }
}

/// A country's vocabularies and object distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryVocabulary {
    pub country: CountryCode,
    /// Entities in popularity order; `object_weights[i]` belongs to `entities[i]`.
    pub entities: Vec<EntityId>,
    pub relations: Vec<String>,
    pub object_weights: Vec<f64>,
}

impl CountryVocabulary {
    /// Normalized object probabilities.
    pub fn object_distribution(&self) -> Vec<(EntityId, f64)> {
        let total: f64 = self.object_weights.iter().sum();
        self.entities.iter().cloned().zip(self.object_weights.iter().map(|w| w / total)).collect()
    }
}

fn vocabulary(prefix: &str, country: &CountryCode, size: usize, exclusive: usize) -> Vec<String> {
    let cc = country.as_str().to_lowercase();
    (0..exclusive)
        .map(|i| format!("{cc}_{prefix}_{i:03}"))
        .chain((0..size - exclusive).map(|i| format!("shared_{prefix}_{i:03}")))
        .collect()
}

pub fn country_vocabulary(spec: &GeneratorSpec, seed: u64, country: &CountryCode) -> CountryVocabulary {
    let mut rng = rng_from(mix(seed, fnv1a(country.as_str().as_bytes())));
    let n_ent = spec.entities_per_country;
    let n_rel = spec.relations_per_country;
    let mut entities = vocabulary("ent", country, n_ent, spec.exclusive_count(n_ent));
    let relations = vocabulary("rel", country, n_rel, spec.exclusive_count(n_rel));
    entities.shuffle(&mut rng);
    let object_weights = (1..=n_ent).map(|rank| (rank as f64).powf(-spec.object_skew)).collect();
    CountryVocabulary {
        country: country.clone(),
        entities: entities.into_iter().map(EntityId::from_normalized).collect(),
        relations,
        object_weights,
    }
}

fn display_name(id: &str) -> String {
    // "isr_ent_003" -> "ISR Entity 3", "shared_ent_010" -> "Shared Entity 10"
    let mut parts = id.split('_');
    let owner = parts.next().unwrap_or_default();
    let _kind = parts.next();
    let index: usize = parts.next().and_then(|n| n.parse().ok()).unwrap_or_default();
    let owner = if owner == "shared" { "Shared".to_string() } else { owner.to_uppercase() };
    format!("{owner} Entity {index}")
}

/// Generates a corpus that is a pure function of `(spec, seed)`.
pub fn generate_synthetic_corpus(spec: &GeneratorSpec, seed: u64) -> Result<EventStore, DatasetError> {
    spec.validate()?;
    let span = (spec.end_date - spec.start_date).num_days() as u64;
    let mut rng = rng_from(mix(seed, 0x5eed));
    let mut events = Vec::with_capacity(spec.countries.len() * spec.events_per_country);

    for country in &spec.countries {
        let vocab = country_vocabulary(spec, seed, country);
        let objects =
            WeightedIndex::new(&vocab.object_weights).map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
        let n = vocab.entities.len();
        for i in 0..spec.events_per_country {
            let timestamp = spec.start_date + Days::new(rng.random_range(0..=span));
            let o = objects.sample(&mut rng);
            // Uniform subject among the other entities keeps the object law intact.
            let mut s = rng.random_range(0..n - 1);
            if s >= o {
                s += 1;
            }
            let relation = &vocab.relations[rng.random_range(0..vocab.relations.len())];
            let ctx = rng.random_range(0..spec.contexts_per_country);
            events.push(EventQuad {
                event_id: format!("syn-{}-{i:06}", country.as_str().to_lowercase()),
                subject: vocab.entities[s].clone(),
                relation: relation.clone(),
                object: vocab.entities[o].clone(),
                timestamp,
                country: country.clone(),
                context_id: Some(format!("{}-ctx{ctx:03}", country.as_str())),
            });
        }
    }

    let mut store = EventStore::from_events(Vec::new());
    for e in &events {
        for id in [&e.subject, &e.object] {
            store.entity_registry.register(id, Some(&display_name(id.as_str())));
        }
    }
    store.events = events;
    Ok(store)
}
