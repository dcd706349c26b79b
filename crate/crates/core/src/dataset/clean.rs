use std::collections::HashMap;

use super::EventStore;

/// Collapses events sharing `(s, r, o, t)` to the one with the smallest
/// event id. Survivors keep their input order.
pub fn deduplicate(store: &EventStore) -> EventStore {
    let mut keeper: HashMap<_, &str> = HashMap::new();
    for e in &store.events {
        keeper
            .entry(e.quad_key())
            .and_modify(|id| {
                if e.event_id.as_str() < *id {
                    *id = &e.event_id;
                }
            })
            .or_insert(&e.event_id);
    }
    let events = store.events.iter().filter(|e| keeper[&e.quad_key()] == e.event_id).cloned().collect();
    EventStore { events, entity_registry: store.entity_registry.clone(), rejects: store.rejects.clone() }
}
