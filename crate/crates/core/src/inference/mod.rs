//! Consultation engine: working memory, matcher and result browser.
//!
//! A [`SessionState`] holds the user's answers for one model of a pinned
//! [`KbSnapshot`](crate::KbSnapshot) together with the live satisfaction
//! mirror of every finding and the satisfied-finding counter of every rule.
//! Both are updated incrementally on each answer and always equal what
//! [`SessionState::recompute`] derives from scratch.
//!
//! A rule is *sure* when every finding is satisfied, *excluded* when some
//! answered finding is not satisfied, and *expected* otherwise. A must-differ
//! finding is never satisfied by an unanswered slot.

mod session;
mod trace;
mod working_memory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Name;

pub use session::{now_secs, SessionState};
pub use trace::{render_trace_html, Trace, TraceRow};
pub use working_memory::{LogEntry, WmAction, WmEntry, WorkingMemory};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InferenceError {
    #[error("no model named {0:?}")]
    UnknownModel(String),
    #[error("slot ({concept:?}, {property:?}) is not used by the model or the ontology")]
    UnknownSlot { concept: String, property: String },
    #[error("{value:?} is not in the value domain of {concept:?}")]
    UnknownValue {
        concept: String,
        property: String,
        value: String,
    },
    #[error("session is pinned to knowledge base version {session}, current is {current}")]
    StaleKb { session: u64, current: u64 },
    #[error("slot ({concept:?}, {property:?}) has no answer")]
    NotAnswered { concept: String, property: String },
    #[error("no rule named {0:?} in this model")]
    UnknownRule(String),
}

impl InferenceError {
    /// Stable identifier used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            InferenceError::UnknownModel(_) => "UnknownModel",
            InferenceError::UnknownSlot { .. } => "UnknownSlot",
            InferenceError::UnknownValue { .. } => "UnknownValue",
            InferenceError::StaleKb { .. } => "StaleKb",
            InferenceError::NotAnswered { .. } => "NotAnswered",
            InferenceError::UnknownRule(_) => "UnknownRule",
        }
    }

    /// The slot the error is about, if any.
    pub fn slot(&self) -> Option<SlotRef> {
        match self {
            InferenceError::UnknownSlot { concept, property }
            | InferenceError::UnknownValue {
                concept, property, ..
            }
            | InferenceError::NotAnswered { concept, property } => Some(SlotRef {
                concept: concept.clone(),
                property: property.clone(),
            }),
            _ => None,
        }
    }
}

/// A (concept, property) pair as authored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotRef {
    pub concept: String,
    pub property: String,
}

impl SlotRef {
    pub fn new(concept: &Name, property: &Name) -> Self {
        Self {
            concept: concept.text().to_owned(),
            property: property.text().to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusKind {
    Sure,
    Expected,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RuleStatus {
    Sure,
    Expected { unanswered: Vec<SlotRef> },
    Excluded { violated: Vec<SlotRef> },
}

impl RuleStatus {
    pub fn kind(&self) -> StatusKind {
        match self {
            RuleStatus::Sure => StatusKind::Sure,
            RuleStatus::Expected { .. } => StatusKind::Expected,
            RuleStatus::Excluded { .. } => StatusKind::Excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SureRule {
    pub rule: String,
    pub consequent: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedRule {
    pub rule: String,
    pub consequent: String,
    pub unanswered: Vec<SlotRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedRule {
    pub rule: String,
    pub consequent: String,
    pub violated: Vec<SlotRef>,
}

/// Partition of a model's rules, each list in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub sure: Vec<SureRule>,
    pub expected: Vec<ExpectedRule>,
    pub excluded: Vec<ExcludedRule>,
    pub kb_version: u64,
}

impl EvaluationResult {
    pub fn sure_names(&self) -> Vec<&str> {
        self.sure.iter().map(|r| r.rule.as_str()).collect()
    }

    pub fn expected_names(&self) -> Vec<&str> {
        self.expected.iter().map(|r| r.rule.as_str()).collect()
    }

    pub fn excluded_names(&self) -> Vec<&str> {
        self.excluded.iter().map(|r| r.rule.as_str()).collect()
    }

    pub fn status_of(&self, rule: &str) -> Option<StatusKind> {
        if self.sure.iter().any(|r| r.rule == rule) {
            Some(StatusKind::Sure)
        } else if self.expected.iter().any(|r| r.rule == rule) {
            Some(StatusKind::Expected)
        } else if self.excluded.iter().any(|r| r.rule == rule) {
            Some(StatusKind::Excluded)
        } else {
            None
        }
    }
}

/// A slot worth asking about next, with the values the user can pick from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub concept: String,
    pub property: String,
    pub values: Vec<String>,
    /// Number of expected rules waiting on this slot.
    pub score: usize,
}
