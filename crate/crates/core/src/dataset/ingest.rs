use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DatasetError, EntityRegistry, EventStore, RejectReason, Rejected};
use crate::model::{normalize_entity, CountryCode, EventQuad};

const COLUMNS: [&str; 9] =
    ["event_id", "date", "subject_id", "subject_name", "relation", "object_id", "object_name", "country", "context_id"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Tsv,
    Jsonl,
}

impl FromStr for SourceFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(SourceFormat::Tsv),
            "jsonl" => Ok(SourceFormat::Jsonl),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawRecord {
    #[serde(default)]
    event_id: String,
    #[serde(default)]
    date: String,
    #[serde(default)]
    subject_id: String,
    #[serde(default)]
    subject_name: String,
    #[serde(default)]
    relation: String,
    #[serde(default)]
    object_id: String,
    #[serde(default)]
    object_name: String,
    #[serde(default)]
    country: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context_id: Option<String>,
}

/// Writes events in a source format `ingest_events` reads back, with display
/// names taken from `registry`.
pub fn write_events<W: Write>(
    events: &[EventQuad],
    registry: &EntityRegistry,
    format: SourceFormat,
    mut out: W,
) -> Result<(), DatasetError> {
    let name = |id: &crate::model::EntityId| registry.display_name(id).unwrap_or("").replace(['\t', '\n', '\r'], " ");
    if format == SourceFormat::Tsv {
        writeln!(out, "{}", COLUMNS.join("\t"))?;
    }
    for e in events {
        let record = RawRecord {
            event_id: e.event_id.clone(),
            date: e.timestamp.to_string(),
            subject_id: e.subject.as_str().to_string(),
            subject_name: name(&e.subject),
            relation: e.relation.clone(),
            object_id: e.object.as_str().to_string(),
            object_name: name(&e.object),
            country: e.country.as_str().to_string(),
            context_id: e.context_id.clone(),
        };
        match format {
            SourceFormat::Tsv => writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                record.event_id,
                record.date,
                record.subject_id,
                record.subject_name,
                record.relation,
                record.object_id,
                record.object_name,
                record.country,
                record.context_id.as_deref().unwrap_or("")
            )?,
            SourceFormat::Jsonl => {
                serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

pub fn ingest_path(path: &Path, format: SourceFormat) -> Result<EventStore, DatasetError> {
    let file = File::open(path)
        .map_err(|source| DatasetError::SourceUnreadable { path: path.display().to_string(), source })?;
    ingest_events(BufReader::new(file), format)
}

/// Parses line-delimited records into validated, normalized events.
pub fn ingest_events<R: BufRead>(reader: R, format: SourceFormat) -> Result<EventStore, DatasetError> {
    let mut store = EventStore::default();
    let mut seen_ids = HashSet::new();
    let mut lines = reader.lines().enumerate();

    let header = match format {
        SourceFormat::Tsv => match lines.next() {
            Some((_, line)) => Some(column_positions(&line?)?),
            None => return Ok(store),
        },
        SourceFormat::Jsonl => None,
    };

    for (idx, line) in lines {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let record = match &header {
            Some(positions) => parse_tsv(line, positions),
            None => serde_json::from_str::<RawRecord>(line).ok(),
        };
        let outcome = match record {
            Some(record) => validate(&record).map(|quad| (quad, record)),
            None => Err(RejectReason::Malformed),
        };
        let outcome = outcome.and_then(|(quad, record)| {
            if seen_ids.insert(quad.event_id.clone()) {
                Ok((quad, record))
            } else {
                Err(RejectReason::DuplicateId)
            }
        });
        match outcome {
            Ok((quad, record)) => {
                store.entity_registry.register(&quad.subject, Some(&record.subject_name));
                store.entity_registry.register(&quad.object, Some(&record.object_name));
                store.events.push(quad);
            }
            Err(reason) => store.rejects.push(Rejected { line: idx + 1, raw: line.to_string(), reason }),
        }
    }
    Ok(store)
}

fn column_positions(header: &str) -> Result<[usize; 9], DatasetError> {
    let names: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let mut positions = [0; 9];
    for (slot, column) in positions.iter_mut().zip(COLUMNS) {
        *slot =
            names.iter().position(|n| *n == column).ok_or_else(|| DatasetError::MissingColumn(column.to_string()))?;
    }
    Ok(positions)
}

fn parse_tsv(line: &str, positions: &[usize; 9]) -> Option<RawRecord> {
    let fields: Vec<&str> = line.split('\t').collect();
    let get = |i: usize| fields.get(positions[i]).map(|s| s.trim().to_string());
    // context_id is the only column allowed to be missing at the end of a row.
    let context_id = get(8).filter(|c| !c.is_empty());
    Some(RawRecord {
        event_id: get(0)?,
        date: get(1)?,
        subject_id: get(2)?,
        subject_name: get(3)?,
        relation: get(4)?,
        object_id: get(5)?,
        object_name: get(6)?,
        country: get(7)?,
        context_id,
    })
}

fn validate(r: &RawRecord) -> Result<EventQuad, RejectReason> {
    let event_id = r.event_id.trim();
    if event_id.is_empty() {
        return Err(RejectReason::EmptyEventId);
    }
    let timestamp = NaiveDate::parse_from_str(r.date.trim(), "%Y-%m-%d").map_err(|_| RejectReason::BadDate)?;
    let country = CountryCode::new(&r.country).map_err(|_| RejectReason::BadCountry)?;
    let entity = |id: &str, name: &str| {
        let raw = if id.trim().is_empty() { name } else { id };
        normalize_entity(raw).map_err(|_| RejectReason::EmptyEntity)
    };
    let subject = entity(&r.subject_id, &r.subject_name)?;
    let object = entity(&r.object_id, &r.object_name)?;
    let relation = normalize_entity(&r.relation).map_err(|_| RejectReason::EmptyEntity)?.as_str().to_string();
    Ok(EventQuad {
        event_id: event_id.to_string(),
        subject,
        relation,
        object,
        timestamp,
        country,
        context_id: r.context_id.as_ref().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()),
    })
}
