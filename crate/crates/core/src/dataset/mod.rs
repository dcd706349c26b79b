//! Event dataset construction: ingestion with validation, de-duplication,
//! historical sequence formation, country partitioning and the
//! knowledge-cutoff split. A seeded synthetic corpus generator drives
//! desk-scale experiments.

mod clean;
mod ingest;
mod partition;
mod prepare;
mod queries;
mod sequence;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_entity, EntityId, EventQuad};

pub use clean::deduplicate;
pub use ingest::{ingest_events, ingest_path, write_events, SourceFormat};
pub use partition::{
    default_countries, default_cutoff, partition_by_country, split_by_cutoff, CountryPartition, SplitDataset,
    G20_COUNTRIES, MIDDLE_EAST_COUNTRIES,
};
pub use prepare::{prepare_dataset, PrepareSummary, PreparedData};
pub use queries::{build_queries, CandidatePools};
pub use sequence::{form_sequences, Sequences, DEFAULT_WINDOW_DAYS};
pub use synth::{generate_synthetic_corpus, GeneratorSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read event source {path}: {source}")]
    SourceUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown source format {0:?} (expected tsv or jsonl)")]
    UnknownFormat(String),
    #[error("missing column {0:?} in header")]
    MissingColumn(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Malformed,
    BadDate,
    BadCountry,
    EmptyEntity,
    EmptyEventId,
    DuplicateId,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A source record that failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub line: usize,
    pub raw: String,
    pub reason: RejectReason,
}

/// Maps normalized names and aliases to entity ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRegistry {
    aliases: BTreeMap<String, EntityId>,
    names: BTreeMap<EntityId, String>,
}

impl EntityRegistry {
    /// Registers an id under itself and, when present, its display name.
    /// The first id registered for an alias keeps it.
    pub fn register(&mut self, id: &EntityId, name: Option<&str>) {
        self.aliases.entry(id.as_str().to_string()).or_insert_with(|| id.clone());
        if let Some(name) = name.filter(|n| !n.trim().is_empty()) {
            if let Ok(alias) = normalize_entity(name) {
                self.aliases.entry(alias.as_str().to_string()).or_insert_with(|| id.clone());
            }
            self.names.entry(id.clone()).or_insert_with(|| name.trim().to_string());
        }
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.aliases.get(id.as_str()) == Some(id)
    }

    /// Resolves free text to an entity after normalization.
    pub fn resolve(&self, text: &str) -> Option<&EntityId> {
        let key = normalize_entity(text).ok()?;
        self.aliases.get(key.as_str())
    }

    pub fn display_name(&self, id: &EntityId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }
}

/// Validated events with their entity registry and the rejected records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventStore {
    pub events: Vec<EventQuad>,
    pub entity_registry: EntityRegistry,
    pub rejects: Vec<Rejected>,
}

impl EventStore {
    /// Builds a store from already-validated events, registering their ids.
    pub fn from_events(events: Vec<EventQuad>) -> Self {
        let mut entity_registry = EntityRegistry::default();
        for e in &events {
            entity_registry.register(&e.subject, None);
            entity_registry.register(&e.object, None);
        }
        EventStore { events, entity_registry, rejects: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
