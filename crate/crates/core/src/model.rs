//! Domain types shared by every stage of the pipeline: event quadruples,
//! chronologically ordered histories, forecast queries and expert outputs.
//!
//! All types are immutable once constructed and serialize as flat JSON
//! objects.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::StrategyConfig;

/// Reserved object id for expert output that matched no known entity.
///
/// Normalization strips surrounding punctuation, so no normalized entity id
/// can ever equal this string.
pub const UNPARSEABLE: &str = "<unparseable>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("entity is empty after normalization: {0:?}")]
    EmptyAfterNormalization(String),
    #[error("invalid country code {0:?} (expected 3 uppercase letters)")]
    BadCountry(String),
    #[error("history event {event_id} dated {date} is not before the query date {query_date}")]
    HistoryNotPrior { event_id: String, date: NaiveDate, query_date: NaiveDate },
    #[error("confidence {0} outside [0, 1]")]
    BadConfidence(f64),
}

/// Lowercase, collapse internal whitespace and strip surrounding punctuation.
pub fn normalize_entity(raw: &str) -> Result<EntityId, ModelError> {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let trimmed = collapsed.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        return Err(ModelError::EmptyAfterNormalization(raw.to_string()));
    }
    Ok(EntityId(trimmed.to_string()))
}

/// A normalized entity identifier (or the [`UNPARSEABLE`] sentinel).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn unparseable() -> Self {
        EntityId(UNPARSEABLE.to_string())
    }

    /// Wraps an already-normalized id without re-checking it.
    pub fn from_normalized(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn is_unparseable(&self) -> bool {
        self.0 == UNPARSEABLE
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// ISO 3166 alpha-3 country code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        let code = code.trim();
        if code.len() == 3 && code.bytes().all(|b| b.is_ascii_uppercase()) {
            Ok(CountryCode(code.to_string()))
        } else {
            Err(ModelError::BadCountry(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryCode {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        CountryCode::new(&value)
    }
}

impl From<CountryCode> for String {
    fn from(code: CountryCode) -> Self {
        code.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One structured event `(subject, relation, object, timestamp)` with its
/// country attribute and optional context grouping key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventQuad {
    pub event_id: String,
    pub subject: EntityId,
    pub relation: String,
    pub object: EntityId,
    pub timestamp: NaiveDate,
    pub country: CountryCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_id: Option<String>,
}

impl EventQuad {
    /// Builds an event from raw strings, normalizing the entities and relation.
    pub fn new(
        event_id: impl Into<String>,
        subject: &str,
        relation: &str,
        object: &str,
        timestamp: NaiveDate,
        country: &str,
        context_id: Option<String>,
    ) -> Result<Self, ModelError> {
        Ok(EventQuad {
            event_id: event_id.into(),
            subject: normalize_entity(subject)?,
            relation: normalize_entity(relation)?.0,
            object: normalize_entity(object)?,
            timestamp,
            country: CountryCode::new(country)?,
            context_id: context_id.filter(|c| !c.trim().is_empty()),
        })
    }

    /// The `(s, r, o, t)` key used for duplicate detection.
    pub fn quad_key(&self) -> (&EntityId, &str, &EntityId, NaiveDate) {
        (&self.subject, &self.relation, &self.object, self.timestamp)
    }

    fn order_key(&self) -> (NaiveDate, &str) {
        (self.timestamp, &self.event_id)
    }
}

/// Events sorted ascending by timestamp, ties broken by event id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "HistoryRepr")]
pub struct EventHistory {
    events: Vec<EventQuad>,
}

#[derive(Deserialize)]
struct HistoryRepr {
    events: Vec<EventQuad>,
}

impl From<HistoryRepr> for EventHistory {
    fn from(repr: HistoryRepr) -> Self {
        EventHistory::new(repr.events)
    }
}

impl EventHistory {
    pub fn new(mut events: Vec<EventQuad>) -> Self {
        events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        EventHistory { events }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[EventQuad] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events strictly before `date`, keeping at most the `limit` most recent.
    pub fn before(&self, date: NaiveDate, limit: usize) -> EventHistory {
        let end = self.events.partition_point(|e| e.timestamp < date);
        let start = end.saturating_sub(limit);
        EventHistory { events: self.events[start..end].to_vec() }
    }

    /// The events observed exactly at `date`.
    pub fn at(&self, date: NaiveDate) -> impl Iterator<Item = &EventQuad> {
        self.events.iter().filter(move |e| e.timestamp == date)
    }
}

/// A partially specified triple `(s, r, ?, t)` with its history and the
/// hidden gold object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QueryRepr")]
pub struct ForecastQuery {
    pub query_id: String,
    pub subject: EntityId,
    pub relation: String,
    pub timestamp: NaiveDate,
    pub country: CountryCode,
    pub history: EventHistory,
    pub gold_object: EntityId,
}

#[derive(Deserialize)]
struct QueryRepr {
    query_id: String,
    subject: EntityId,
    relation: String,
    timestamp: NaiveDate,
    country: CountryCode,
    history: EventHistory,
    gold_object: EntityId,
}

impl TryFrom<QueryRepr> for ForecastQuery {
    type Error = ModelError;

    fn try_from(r: QueryRepr) -> Result<Self, Self::Error> {
        check_prior(&r.history, r.timestamp)?;
        Ok(ForecastQuery {
            query_id: r.query_id,
            subject: r.subject,
            relation: r.relation,
            timestamp: r.timestamp,
            country: r.country,
            history: r.history,
            gold_object: r.gold_object,
        })
    }
}

fn check_prior(history: &EventHistory, date: NaiveDate) -> Result<(), ModelError> {
    match history.events().iter().find(|e| e.timestamp >= date) {
        Some(e) => {
            Err(ModelError::HistoryNotPrior { event_id: e.event_id.clone(), date: e.timestamp, query_date: date })
        }
        None => Ok(()),
    }
}

/// Turns an observed event into a query whose gold answer is its object.
pub fn make_query(quad: &EventQuad, history: EventHistory) -> Result<ForecastQuery, ModelError> {
    check_prior(&history, quad.timestamp)?;
    Ok(ForecastQuery {
        query_id: quad.event_id.clone(),
        subject: quad.subject.clone(),
        relation: quad.relation.clone(),
        timestamp: quad.timestamp,
        country: quad.country.clone(),
        history,
        gold_object: quad.object.clone(),
    })
}

impl ForecastQuery {
    /// Re-attaches the gold object, recovering the original quadruple.
    pub fn to_quad(&self) -> EventQuad {
        EventQuad {
            event_id: self.query_id.clone(),
            subject: self.subject.clone(),
            relation: self.relation.clone(),
            object: self.gold_object.clone(),
            timestamp: self.timestamp,
            country: self.country.clone(),
            context_id: None,
        }
    }

    pub fn is_correct(&self, object: &EntityId) -> bool {
        !object.is_unparseable() && *object == self.gold_object
    }
}

/// One expert's answer `o_j` with confidence `c_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertPrediction {
    pub expert_id: String,
    pub object: EntityId,
    pub confidence: f64,
}

impl ExpertPrediction {
    pub fn new(expert_id: impl Into<String>, object: EntityId, confidence: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::BadConfidence(confidence));
        }
        Ok(ExpertPrediction { expert_id: expert_id.into(), object, confidence })
    }

    pub fn unparseable(expert_id: impl Into<String>) -> Self {
        ExpertPrediction { expert_id: expert_id.into(), object: EntityId::unparseable(), confidence: 0.0 }
    }
}

/// The leader's final answer together with the aggregate score of every
/// candidate object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedForecast {
    pub object: EntityId,
    pub strategy: StrategyConfig,
    pub score_table: BTreeMap<EntityId, f64>,
    pub contributing_experts: Vec<String>,
}
