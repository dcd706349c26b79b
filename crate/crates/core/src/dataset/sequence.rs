use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{EntityId, EventHistory, EventQuad};

pub const DEFAULT_WINDOW_DAYS: u32 = 7;

/// Historical event sequences keyed by context.
///
/// Keys are `ctx:<context_id>` for explicitly grouped events and
/// `auto:<smallest event id>` for entity-linked components.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sequences {
    pub groups: BTreeMap<String, EventHistory>,
    #[serde(skip)]
    membership: HashMap<String, String>,
}

impl Sequences {
    fn new(groups: BTreeMap<String, EventHistory>) -> Self {
        let membership =
            groups.iter().flat_map(|(key, h)| h.events().iter().map(|e| (e.event_id.clone(), key.clone()))).collect();
        Sequences { groups, membership }
    }

    pub fn group_of(&self, event_id: &str) -> Option<&EventHistory> {
        self.membership.get(event_id).and_then(|k| self.groups.get(k))
    }

    pub fn key_of(&self, event_id: &str) -> Option<&str> {
        self.membership.get(event_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups events into chronologically sorted histories.
///
/// Events with a context id share a group per id. The rest are linked when
/// they share an entity and lie at most `window_days` apart; each connected
/// component becomes a group.
pub fn form_sequences(events: &[EventQuad], window_days: u32) -> Sequences {
    let window = i64::from(window_days.max(1));
    let mut groups: BTreeMap<String, Vec<EventQuad>> = BTreeMap::new();
    let mut loose = Vec::new();
    for e in events {
        match &e.context_id {
            Some(ctx) => groups.entry(format!("ctx:{ctx}")).or_default().push(e.clone()),
            None => loose.push(e),
        }
    }

    // Linking consecutive occurrences of each entity (by date) yields the
    // same components as linking every in-window pair.
    let mut by_entity: HashMap<&EntityId, Vec<usize>> = HashMap::new();
    for (i, e) in loose.iter().enumerate() {
        by_entity.entry(&e.subject).or_default().push(i);
        if e.object != e.subject {
            by_entity.entry(&e.object).or_default().push(i);
        }
    }
    let mut components = DisjointSet::new(loose.len());
    for members in by_entity.values_mut() {
        members.sort_by_key(|&i| loose[i].timestamp);
        for pair in members.windows(2) {
            let gap = (loose[pair[1]].timestamp - loose[pair[0]].timestamp).num_days();
            if gap <= window {
                components.union(pair[0], pair[1]);
            }
        }
    }
    let mut auto: BTreeMap<usize, Vec<EventQuad>> = BTreeMap::new();
    for (i, e) in loose.iter().enumerate() {
        auto.entry(components.find(i)).or_default().push((*e).clone());
    }
    for members in auto.into_values() {
        let min_id = members.iter().map(|e| e.event_id.as_str()).min().expect("component is non-empty").to_string();
        groups.insert(format!("auto:{min_id}"), members);
    }

    Sequences::new(groups.into_iter().map(|(k, v)| (k, EventHistory::new(v))).collect())
}
