//! Immutable, versioned knowledge-base snapshots.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::issue::{has_errors, ParseIssue};
use crate::lexicon::NormalizationPolicy;
use crate::model::{Name, Ontology, RuleBase};
use crate::xml::{serialize_ontology, serialize_rulebase};

/// Identity key of a slot: normalized (concept, property).
pub type SlotKey = (String, String);

/// A distinct slot used by a model's findings.
#[derive(Debug, Clone)]
pub(crate) struct SlotInfo {
    pub concept: Name,
    pub property: Name,
    /// (rule index, finding index) of every finding on this slot, document order.
    pub findings: Vec<(usize, usize)>,
    /// Values the model's findings compare this slot against, deduplicated.
    pub cited_values: Vec<Name>,
}

/// Per-model lookup tables built once per snapshot.
#[derive(Debug, Clone)]
pub(crate) struct ModelIndex {
    /// Slots in order of first occurrence among the model's findings.
    pub slots: Vec<SlotInfo>,
    pub slot_ids: HashMap<SlotKey, usize>,
    /// Slot id of each finding, indexed `[rule][finding]`.
    pub finding_slots: Vec<Vec<usize>>,
}

/// Union of everything the ontology says about one concept name.
#[derive(Debug, Clone, Default)]
pub(crate) struct ConceptInfo {
    pub property_keys: Vec<String>,
    pub values: Vec<Name>,
}

/// An ontology and rulebase pair pinned at a version.
///
/// Never mutated after construction; updates build a new snapshot with a
/// higher version.
#[derive(Debug)]
pub struct KbSnapshot {
    ontology: Ontology,
    rulebase: RuleBase,
    version: u64,
    fingerprint: String,
    policy: NormalizationPolicy,
    pub(crate) models: Vec<ModelIndex>,
    pub(crate) concepts: HashMap<String, ConceptInfo>,
}

impl KbSnapshot {
    /// Validates both documents and builds the lookup tables.
    pub fn new(
        ontology: Ontology,
        rulebase: RuleBase,
        version: u64,
    ) -> Result<Self, Vec<ParseIssue>> {
        Self::with_policy(ontology, rulebase, version, NormalizationPolicy::default())
    }

    /// `policy` must be the policy the names were keyed with.
    pub fn with_policy(
        ontology: Ontology,
        rulebase: RuleBase,
        version: u64,
        policy: NormalizationPolicy,
    ) -> Result<Self, Vec<ParseIssue>> {
        let mut issues = ontology.validate();
        issues.extend(rulebase.validate());
        if has_errors(&issues) {
            return Err(issues);
        }
        let fingerprint = fingerprint(&ontology, &rulebase);
        let models = rulebase.models.iter().map(index_model).collect();
        let concepts = index_concepts(&ontology);
        Ok(Self {
            ontology,
            rulebase,
            version,
            fingerprint,
            policy,
            models,
            concepts,
        })
    }

    /// A successor snapshot with `version + 1`.
    pub fn successor(
        &self,
        ontology: Ontology,
        rulebase: RuleBase,
    ) -> Result<Self, Vec<ParseIssue>> {
        Self::with_policy(ontology, rulebase, self.version + 1, self.policy)
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn rulebase(&self) -> &RuleBase {
        &self.rulebase
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Hex SHA-256 over both canonical serializations.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn policy(&self) -> &NormalizationPolicy {
        &self.policy
    }

    pub fn name(&self, text: &str) -> Name {
        Name::with_policy(text, &self.policy)
    }

    pub(crate) fn model_index(&self, key: &str) -> Option<usize> {
        self.rulebase
            .models
            .iter()
            .position(|m| m.name.key() == key)
    }
}

fn fingerprint(ontology: &Ontology, rulebase: &RuleBase) -> String {
    let mut hasher = Sha256::new();
    for doc in [serialize_ontology(ontology), serialize_rulebase(rulebase)] {
        hasher.update((doc.bytes.len() as u64).to_be_bytes());
        hasher.update(&doc.bytes);
    }
    hex::encode(hasher.finalize())
}

fn index_model(model: &crate::model::Model) -> ModelIndex {
    let mut slots: Vec<SlotInfo> = Vec::new();
    let mut slot_ids = HashMap::new();
    let mut finding_slots = Vec::with_capacity(model.rules.len());
    for (ri, rule) in model.rules.iter().enumerate() {
        let mut ids = Vec::with_capacity(rule.findings.len());
        for (fi, finding) in rule.findings.iter().enumerate() {
            let key = (
                finding.concept.key().to_owned(),
                finding.property.key().to_owned(),
            );
            let id = *slot_ids.entry(key).or_insert_with(|| {
                slots.push(SlotInfo {
                    concept: finding.concept.clone(),
                    property: finding.property.clone(),
                    findings: Vec::new(),
                    cited_values: Vec::new(),
                });
                slots.len() - 1
            });
            let slot = &mut slots[id];
            slot.findings.push((ri, fi));
            if !slot.cited_values.iter().any(|v| v.same_as(&finding.value)) {
                slot.cited_values.push(finding.value.clone());
            }
            ids.push(id);
        }
        finding_slots.push(ids);
    }
    ModelIndex {
        slots,
        slot_ids,
        finding_slots,
    }
}

fn index_concepts(ontology: &Ontology) -> HashMap<String, ConceptInfo> {
    let mut map: HashMap<String, ConceptInfo> = HashMap::new();
    for (_, _, concept) in ontology.concepts() {
        let info = map.entry(concept.name.key().to_owned()).or_default();
        if !info
            .property_keys
            .iter()
            .any(|p| p == concept.property.key())
        {
            info.property_keys.push(concept.property.key().to_owned());
        }
        for value in &concept.values {
            if !info.values.iter().any(|v| v.same_as(value)) {
                info.values.push(value.clone());
            }
        }
    }
    map
}
