use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::model::{Finding, Model, Name, Polarity};
use crate::snapshot::KbSnapshot;

use super::{
    EvaluationResult, ExcludedRule, ExpectedRule, InferenceError, Question, RuleStatus, SlotRef,
    SureRule, Trace, TraceRow, WmEntry, WorkingMemory,
};

pub fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Whether `finding` holds given the answer (if any) for its slot.
fn satisfied(finding: &Finding, answer: Option<&WmEntry>) -> bool {
    match (answer, finding.polarity) {
        (None, _) => false,
        (Some(a), Polarity::MustEqual) => a.value.same_as(&finding.value),
        (Some(a), Polarity::MustDiffer) => !a.value.same_as(&finding.value),
    }
}

/// One consultation over one model of a pinned snapshot.
#[derive(Debug, Clone)]
pub struct SessionState {
    id: String,
    kb: Arc<KbSnapshot>,
    model: usize,
    wm: WorkingMemory,
    /// Live satisfaction flag per finding, `[rule][finding]`.
    mirrors: Vec<Vec<bool>>,
    /// Satisfied-finding count per rule.
    counters: Vec<usize>,
    created_at: u64,
    last_active: u64,
}

impl SessionState {
    pub fn new(kb: Arc<KbSnapshot>, model_name: &str) -> Result<Self, InferenceError> {
        let key = kb.name(model_name);
        let model = kb
            .model_index(key.key())
            .ok_or_else(|| InferenceError::UnknownModel(model_name.to_owned()))?;
        let rules = &kb.rulebase().models[model].rules;
        let mirrors = rules.iter().map(|r| vec![false; r.arity()]).collect();
        let counters = vec![0; rules.len()];
        let now = now_secs();
        Ok(Self {
            id: uuid::Uuid::new_v4().simple().to_string(),
            kb,
            model,
            wm: WorkingMemory::new(),
            mirrors,
            counters,
            created_at: now,
            last_active: now,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kb(&self) -> &Arc<KbSnapshot> {
        &self.kb
    }

    pub fn kb_version(&self) -> u64 {
        self.kb.version()
    }

    pub fn model(&self) -> &Model {
        &self.kb.rulebase().models[self.model]
    }

    pub fn working_memory(&self) -> &WorkingMemory {
        &self.wm
    }

    pub fn mirrors(&self) -> &[Vec<bool>] {
        &self.mirrors
    }

    pub fn counters(&self) -> &[usize] {
        &self.counters
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn last_active(&self) -> u64 {
        self.last_active
    }

    pub fn touch(&mut self, now: u64) {
        self.last_active = self.last_active.max(now);
    }

    /// Fails with `StaleKb` when `strict` and the session is not pinned to `current_version`.
    pub fn ensure_current(&self, current_version: u64, strict: bool) -> Result<(), InferenceError> {
        if strict && self.kb.version() != current_version {
            return Err(InferenceError::StaleKb {
                session: self.kb.version(),
                current: current_version,
            });
        }
        Ok(())
    }

    /// Records `value` for the slot, replacing any earlier answer.
    pub fn assert_finding(
        &mut self,
        concept: &str,
        property: &str,
        value: &str,
    ) -> Result<(), InferenceError> {
        let concept_name = self.kb.name(concept);
        let property_name = self.kb.name(property);
        let value_name = self.kb.name(value);
        let slot_key = (
            concept_name.key().to_owned(),
            property_name.key().to_owned(),
        );

        let slot_id = self.kb.models[self.model].slot_ids.get(&slot_key).copied();
        let known = self.kb.concepts.get(concept_name.key());
        let in_ontology = known.is_some_and(|c| c.property_keys.contains(&slot_key.1));
        if slot_id.is_none() && !in_ontology {
            return Err(InferenceError::UnknownSlot {
                concept: concept.to_owned(),
                property: property.to_owned(),
            });
        }
        if let Some(info) = known {
            if !info.values.iter().any(|v| v.same_as(&value_name)) {
                return Err(InferenceError::UnknownValue {
                    concept: concept.to_owned(),
                    property: property.to_owned(),
                    value: value.to_owned(),
                });
            }
        }

        self.wm.set(WmEntry {
            concept: concept_name,
            property: property_name,
            value: value_name,
        });
        if let Some(id) = slot_id {
            self.refresh_slot(id);
        }
        self.touch(now_secs());
        Ok(())
    }

    /// Removes the answer for the slot.
    pub fn retract_finding(&mut self, concept: &str, property: &str) -> Result<(), InferenceError> {
        let concept_name = self.kb.name(concept);
        let property_name = self.kb.name(property);
        if self.wm.remove(&concept_name, &property_name).is_none() {
            return Err(InferenceError::NotAnswered {
                concept: concept.to_owned(),
                property: property.to_owned(),
            });
        }
        let slot_key = (
            concept_name.key().to_owned(),
            property_name.key().to_owned(),
        );
        if let Some(&id) = self.kb.models[self.model].slot_ids.get(&slot_key) {
            self.refresh_slot(id);
        }
        self.touch(now_secs());
        Ok(())
    }

    /// Re-evaluates the findings on one slot and adjusts their rules' counters.
    fn refresh_slot(&mut self, slot_id: usize) {
        let kb = Arc::clone(&self.kb);
        let slot = &kb.models[self.model].slots[slot_id];
        let answer = self.wm.get(slot.concept.key(), slot.property.key());
        let rules = &kb.rulebase().models[self.model].rules;
        for &(ri, fi) in &slot.findings {
            let now = satisfied(&rules[ri].findings[fi], answer);
            let mirror = &mut self.mirrors[ri][fi];
            if *mirror != now {
                *mirror = now;
                if now {
                    self.counters[ri] += 1;
                } else {
                    self.counters[ri] -= 1;
                }
            }
        }
    }

    /// Mirrors and counters derived from the working memory alone.
    pub fn recompute(&self) -> (Vec<Vec<bool>>, Vec<usize>) {
        let mirrors: Vec<Vec<bool>> = self
            .model()
            .rules
            .iter()
            .map(|rule| {
                rule.findings
                    .iter()
                    .map(|f| satisfied(f, self.wm.get(f.concept.key(), f.property.key())))
                    .collect()
            })
            .collect();
        let counters = mirrors
            .iter()
            .map(|row| row.iter().filter(|s| **s).count())
            .collect();
        (mirrors, counters)
    }

    fn status_at(&self, ri: usize) -> RuleStatus {
        let rule = &self.model().rules[ri];
        if self.counters[ri] == rule.arity() {
            return RuleStatus::Sure;
        }
        let mut violated = Vec::new();
        let mut unanswered = Vec::new();
        for (fi, finding) in rule.findings.iter().enumerate() {
            if self.mirrors[ri][fi] {
                continue;
            }
            let slot = SlotRef::new(&finding.concept, &finding.property);
            if self
                .wm
                .contains(finding.concept.key(), finding.property.key())
            {
                violated.push(slot);
            } else {
                unanswered.push(slot);
            }
        }
        if violated.is_empty() {
            RuleStatus::Expected { unanswered }
        } else {
            RuleStatus::Excluded { violated }
        }
    }

    pub fn evaluate(&self) -> EvaluationResult {
        let mut result = EvaluationResult {
            sure: Vec::new(),
            expected: Vec::new(),
            excluded: Vec::new(),
            kb_version: self.kb.version(),
        };
        for (ri, rule) in self.model().rules.iter().enumerate() {
            let name = rule.name.text().to_owned();
            let consequent = rule.consequent.text().to_owned();
            match self.status_at(ri) {
                RuleStatus::Sure => result.sure.push(SureRule {
                    rule: name,
                    consequent,
                }),
                RuleStatus::Expected { unanswered } => result.expected.push(ExpectedRule {
                    rule: name,
                    consequent,
                    unanswered,
                }),
                RuleStatus::Excluded { violated } => result.excluded.push(ExcludedRule {
                    rule: name,
                    consequent,
                    violated,
                }),
            }
        }
        result
    }

    /// Up to `k` unanswered slots that expected rules still depend on.
    ///
    /// Slots are ranked by how many expected rules reference them; ties go to
    /// the slot that appears first in the model.
    pub fn next_questions(&self, k: usize) -> Vec<Question> {
        let index = &self.kb.models[self.model];
        let mut scores = vec![0usize; index.slots.len()];
        for ri in 0..self.model().rules.len() {
            if let RuleStatus::Expected { .. } = self.status_at(ri) {
                for (fi, &sid) in index.finding_slots[ri].iter().enumerate() {
                    if !self.mirrors[ri][fi] {
                        scores[sid] += 1;
                    }
                }
            }
        }
        let mut ranked: Vec<usize> = (0..scores.len()).filter(|&s| scores[s] > 0).collect();
        ranked.sort_by(|a, b| scores[*b].cmp(&scores[*a]).then(a.cmp(b)));
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|sid| {
                let slot = &index.slots[sid];
                let values = match self.kb.concepts.get(slot.concept.key()) {
                    Some(info) => &info.values,
                    None => &slot.cited_values,
                };
                Question {
                    concept: slot.concept.text().to_owned(),
                    property: slot.property.text().to_owned(),
                    values: values.iter().map(|v| v.text().to_owned()).collect(),
                    score: scores[sid],
                }
            })
            .collect()
    }

    /// Per-finding account of one rule against the current answers.
    pub fn explain(&self, rule_name: &str) -> Result<Trace, InferenceError> {
        let key = self.kb.name(rule_name);
        let ri = self
            .model()
            .rules
            .iter()
            .position(|r| r.name.same_as(&key))
            .ok_or_else(|| InferenceError::UnknownRule(rule_name.to_owned()))?;
        let rule = &self.model().rules[ri];
        let rows = rule
            .findings
            .iter()
            .enumerate()
            .map(|(fi, f)| TraceRow {
                slot: SlotRef::new(&f.concept, &f.property),
                polarity: f.polarity,
                required: f.value.text().to_owned(),
                observed: self
                    .wm
                    .get(f.concept.key(), f.property.key())
                    .map(|e| e.value.text().to_owned()),
                satisfied: self.mirrors[ri][fi],
            })
            .collect();
        Ok(Trace {
            rule: rule.name.text().to_owned(),
            consequent: rule.consequent.text().to_owned(),
            rows,
            status: self.status_at(ri),
        })
    }

    /// Answer for a slot, if given.
    pub fn answer(&self, concept: &str, property: &str) -> Option<&Name> {
        let c = self.kb.name(concept);
        let p = self.kb.name(property);
        self.wm.get(c.key(), p.key()).map(|e| &e.value)
    }
}
