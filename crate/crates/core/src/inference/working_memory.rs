use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::lexicon::NormalizationPolicy;
use crate::model::Name;
use crate::snapshot::SlotKey;

use super::SlotRef;

/// One answered slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WmEntry {
    pub concept: Name,
    pub property: Name,
    pub value: Name,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WmAction {
    Assert,
    Replace,
    Retract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub slot: SlotRef,
    /// Absent for retractions.
    pub value: Option<String>,
    pub action: WmAction,
}

/// Single-valued slot store with an append-only assertion log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkingMemory {
    entries: HashMap<SlotKey, WmEntry>,
    log: Vec<LogEntry>,
}

fn key_of(concept: &Name, property: &Name) -> SlotKey {
    (concept.key().to_owned(), property.key().to_owned())
}

impl WorkingMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a working memory by replaying `log` under `policy`.
    pub fn from_log(log: &[LogEntry], policy: &NormalizationPolicy) -> Self {
        let mut wm = Self::new();
        for entry in log {
            let concept = Name::with_policy(entry.slot.concept.as_str(), policy);
            let property = Name::with_policy(entry.slot.property.as_str(), policy);
            match (&entry.action, &entry.value) {
                (WmAction::Retract, _) => {
                    wm.remove(&concept, &property);
                }
                (_, Some(value)) => {
                    wm.set(WmEntry {
                        concept,
                        property,
                        value: Name::with_policy(value.as_str(), policy),
                    });
                }
                (_, None) => {}
            }
        }
        wm
    }

    pub fn get(&self, concept_key: &str, property_key: &str) -> Option<&WmEntry> {
        self.entries
            .get(&(concept_key.to_owned(), property_key.to_owned()))
    }

    pub fn contains(&self, concept_key: &str, property_key: &str) -> bool {
        self.get(concept_key, property_key).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &WmEntry> {
        self.entries.values()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Stores `entry`, replacing any earlier answer for the slot.
    pub(crate) fn set(&mut self, entry: WmEntry) -> Option<WmEntry> {
        let key = key_of(&entry.concept, &entry.property);
        let log = LogEntry {
            slot: SlotRef::new(&entry.concept, &entry.property),
            value: Some(entry.value.text().to_owned()),
            action: WmAction::Assert,
        };
        let previous = self.entries.insert(key, entry);
        self.log.push(LogEntry {
            action: if previous.is_some() {
                WmAction::Replace
            } else {
                WmAction::Assert
            },
            ..log
        });
        previous
    }

    pub(crate) fn remove(&mut self, concept: &Name, property: &Name) -> Option<WmEntry> {
        let removed = self.entries.remove(&key_of(concept, property));
        if removed.is_some() {
            self.log.push(LogEntry {
                slot: SlotRef::new(concept, property),
                value: None,
                action: WmAction::Retract,
            });
        }
        removed
    }
}
