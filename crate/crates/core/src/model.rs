//! In-memory knowledge types: the ontology tree and the rulebase.
//!
//! Every name keeps the text exactly as authored next to its normalized key.
//! Display and serialization use the text; identity (lookups, uniqueness,
//! matching) uses the key.

use std::collections::HashSet;
use std::fmt;

use crate::issue::{IssueCode, ParseIssue};
use crate::lexicon::{normalize_text, NormalizationPolicy};
use crate::xml::elements as el;

/// Property name used when a concept does not declare one.
pub const DEFAULT_PROPERTY: &str = "Value";

/// Authored text plus its normalized identity key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Name {
    text: String,
    key: String,
}

impl Name {
    /// Builds a name keyed under the default normalization policy.
    pub fn new(text: impl Into<String>) -> Self {
        Self::with_policy(text, &NormalizationPolicy::default())
    }

    pub fn with_policy(text: impl Into<String>, policy: &NormalizationPolicy) -> Self {
        let text = text.into();
        let key = normalize_text(&text, policy);
        Self { text, key }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    /// Same identity, regardless of spelling variant.
    pub fn same_as(&self, other: &Name) -> bool {
        self.key == other.key
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    pub regulations: Vec<Regulation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regulation {
    pub name: Name,
    pub contexts: Vec<Context>,
}

/// A decision context: one part of a regulation and the concepts it asks about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub name: Name,
    pub concepts: Vec<Concept>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub name: Name,
    pub property: Name,
    pub values: Vec<Name>,
}

/// One occurrence of a concept in the ontology tree.
#[derive(Debug, Clone, Copy)]
pub struct ConceptHit<'a> {
    pub regulation: &'a Regulation,
    pub context: &'a Context,
    pub concept: &'a Concept,
}

impl Ontology {
    /// All concepts in document order with their enclosing regulation and context.
    pub fn concepts(&self) -> impl Iterator<Item = (&Regulation, &Context, &Concept)> {
        self.regulations.iter().flat_map(|reg| {
            reg.contexts
                .iter()
                .flat_map(move |ctx| ctx.concepts.iter().map(move |c| (reg, ctx, c)))
        })
    }

    /// Every occurrence of the concept whose normalized name is `concept_key`.
    pub fn lookup_concept(&self, concept_key: &str) -> Vec<ConceptHit<'_>> {
        self.concepts()
            .filter(|(_, _, c)| c.name.key() == concept_key)
            .map(|(regulation, context, concept)| ConceptHit {
                regulation,
                context,
                concept,
            })
            .collect()
    }

    pub fn regulation(&self, key: &str) -> Option<&Regulation> {
        self.regulations.iter().find(|r| r.name.key() == key)
    }

    /// Checks sibling uniqueness, empty names and empty value domains.
    pub fn validate(&self) -> Vec<ParseIssue> {
        let mut issues = Vec::new();
        let root = format!("/{}", el::ONTOLOGY_ROOT);
        let mut regs = HashSet::new();
        for (ri, reg) in self.regulations.iter().enumerate() {
            let reg_path = format!("{root}/{}[{}]", el::REGULATION, ri + 1);
            check_name(&mut issues, &reg.name, &reg_path, el::REGULATION_NAME);
            if !regs.insert(reg.name.key()) {
                issues.push(duplicate(&reg_path, "regulation", &reg.name));
            }
            let mut ctxs = HashSet::new();
            for (ci, ctx) in reg.contexts.iter().enumerate() {
                let ctx_path = format!("{reg_path}/{}[{}]", el::CONTEXT, ci + 1);
                check_name(&mut issues, &ctx.name, &ctx_path, el::CONTEXT_NAME);
                if !ctxs.insert(ctx.name.key()) {
                    issues.push(duplicate(&ctx_path, "context", &ctx.name));
                }
                let mut concepts = HashSet::new();
                for (ki, concept) in ctx.concepts.iter().enumerate() {
                    let c_path = format!("{ctx_path}/{}[{}]", el::CONCEPT, ki + 1);
                    check_name(&mut issues, &concept.name, &c_path, el::CONCEPT_NAME);
                    check_name(
                        &mut issues,
                        &concept.property,
                        &c_path,
                        el::CONCEPT_PROPERTY,
                    );
                    if !concepts.insert(concept.name.key()) {
                        issues.push(duplicate(&c_path, "concept", &concept.name));
                    }
                    if concept.values.is_empty() {
                        issues.push(ParseIssue::error(
                            IssueCode::EmptyDomain,
                            &c_path,
                            format!("concept {:?} has no values", concept.name.text()),
                        ));
                    }
                    let mut values = HashSet::new();
                    for (vi, value) in concept.values.iter().enumerate() {
                        let v_path = format!("{c_path}/{}[{}]", el::VALUE, vi + 1);
                        check_name(&mut issues, value, &v_path, el::VALUE_NAME);
                        if !values.insert(value.key()) {
                            issues.push(duplicate(&v_path, "value", value));
                        }
                    }
                }
            }
        }
        issues
    }
}

impl Concept {
    /// Values in document order.
    pub fn value_domain(&self) -> Vec<&str> {
        self.values.iter().map(Name::text).collect()
    }

    pub fn has_value(&self, key: &str) -> bool {
        self.values.iter().any(|v| v.key() == key)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleBase {
    pub models: Vec<Model>,
}

/// The rules of one regulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: Name,
    pub rules: Vec<Rule>,
}

/// `IF findings THEN consequent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: Name,
    pub consequent: Name,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    MustEqual,
    MustDiffer,
}

impl Polarity {
    /// Attribute spelling: `Yes` for must-equal, `No` for must-differ.
    pub fn as_attr(self) -> &'static str {
        match self {
            Polarity::MustEqual => "Yes",
            Polarity::MustDiffer => "No",
        }
    }

    pub fn from_attr(s: &str) -> Option<Self> {
        match s {
            "Yes" => Some(Polarity::MustEqual),
            "No" => Some(Polarity::MustDiffer),
            _ => None,
        }
    }
}

/// One antecedent condition: `concept.property (=|≠) value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub concept: Name,
    pub property: Name,
    pub value: Name,
    pub polarity: Polarity,
}

impl Finding {
    pub fn slot_key(&self) -> (&str, &str) {
        (self.concept.key(), self.property.key())
    }
}

impl RuleBase {
    /// Model names in document order.
    pub fn list_models(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.name.text()).collect()
    }

    pub fn model(&self, key: &str) -> Option<&Model> {
        self.models.iter().find(|m| m.name.key() == key)
    }

    pub fn validate(&self) -> Vec<ParseIssue> {
        let mut issues = Vec::new();
        let root = format!("/{}", el::RULES_ROOT);
        let mut models = HashSet::new();
        for (mi, model) in self.models.iter().enumerate() {
            let m_path = format!("{root}/{}[{}]", el::MODEL, mi + 1);
            check_name(&mut issues, &model.name, &m_path, el::MODEL_NAME);
            if !models.insert(model.name.key()) {
                issues.push(duplicate(&m_path, "model", &model.name));
            }
            let mut rules = HashSet::new();
            for (ri, rule) in model.rules.iter().enumerate() {
                let r_path = format!("{m_path}/{}[{}]", el::RULE, ri + 1);
                check_name(&mut issues, &rule.name, &r_path, el::RULE_NAME);
                check_name(&mut issues, &rule.consequent, &r_path, el::RULE_CONSEQUENT);
                if !rules.insert(rule.name.key()) {
                    issues.push(duplicate(&r_path, "rule", &rule.name));
                }
                if rule.findings.is_empty() {
                    issues.push(ParseIssue::error(
                        IssueCode::EmptyRule,
                        &r_path,
                        format!("rule {:?} has no findings", rule.name.text()),
                    ));
                }
                let mut slots = HashSet::new();
                for (fi, finding) in rule.findings.iter().enumerate() {
                    let f_path = format!("{r_path}/{}[{}]", el::FINDING, fi + 1);
                    check_name(&mut issues, &finding.concept, &f_path, el::FINDING_CONCEPT);
                    check_name(
                        &mut issues,
                        &finding.property,
                        &f_path,
                        el::FINDING_PROPERTY,
                    );
                    if !slots.insert(finding.slot_key()) {
                        issues.push(ParseIssue::error(
                            IssueCode::DuplicateSlot,
                            &f_path,
                            format!(
                                "slot ({:?}, {:?}) is already tested by this rule",
                                finding.concept.text(),
                                finding.property.text()
                            ),
                        ));
                    }
                }
            }
        }
        issues
    }
}

impl Model {
    pub fn rule(&self, key: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name.key() == key)
    }
}

impl Rule {
    /// Number of findings in the antecedent.
    pub fn arity(&self) -> usize {
        self.findings.len()
    }
}

fn check_name(issues: &mut Vec<ParseIssue>, name: &Name, path: &str, attr: &str) {
    if name.key().is_empty() {
        issues.push(ParseIssue::error(
            IssueCode::EmptyName,
            path,
            format!("attribute {attr} is empty"),
        ));
    }
}

fn duplicate(path: &str, what: &str, name: &Name) -> ParseIssue {
    ParseIssue::error(
        IssueCode::DuplicateName,
        path,
        format!("duplicate {what} name {:?}", name.text()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finding(concept: &str, value: &str) -> Finding {
        Finding {
            concept: Name::new(concept),
            property: Name::new(DEFAULT_PROPERTY),
            value: Name::new(value),
            polarity: Polarity::MustEqual,
        }
    }

    fn rule(name: &str, findings: Vec<Finding>) -> Rule {
        Rule {
            name: Name::new(name),
            consequent: Name::new(format!("then {name}")),
            findings,
        }
    }

    #[test]
    fn list_models_keeps_insertion_order() {
        let rb = RuleBase {
            models: vec![
                Model {
                    name: Name::new("A"),
                    rules: vec![],
                },
                Model {
                    name: Name::new("B"),
                    rules: vec![],
                },
            ],
        };
        assert_eq!(rb.list_models(), vec!["A", "B"]);
        assert!(RuleBase::default().list_models().is_empty());
    }

    #[test]
    fn arity_counts_findings() {
        let r = rule(
            "R",
            vec![finding("a", "1"), finding("b", "1"), finding("c", "1")],
        );
        assert_eq!(r.arity(), 3);
    }

    #[test]
    fn names_compare_by_key() {
        let a = Name::new("الإعلان");
        let b = Name::new("الاعلان");
        assert!(a.same_as(&b));
        assert_ne!(a, b);
        assert_eq!(a.text(), "الإعلان");
    }

    #[test]
    fn empty_ontology_lookup() {
        assert!(Ontology::default().lookup_concept("x").is_empty());
    }

    #[test]
    fn validate_catches_empty_rule_and_duplicate_slot() {
        let rb = RuleBase {
            models: vec![Model {
                name: Name::new("M"),
                rules: vec![
                    rule("R1", vec![]),
                    rule("R2", vec![finding("a", "1"), finding("A", "2")]),
                ],
            }],
        };
        let issues = rb.validate();
        let codes: Vec<_> = issues.iter().map(|i| (i.code, i.path.as_str())).collect();
        assert_eq!(
            codes,
            vec![
                (
                    IssueCode::EmptyRule,
                    "/KSA_Civil_Regulation/Model[1]/Rule[1]"
                ),
                (
                    IssueCode::DuplicateSlot,
                    "/KSA_Civil_Regulation/Model[1]/Rule[2]/Finding[2]"
                ),
            ]
        );
    }

    #[test]
    fn validate_catches_duplicate_names_after_normalization() {
        let concept = |n: &str| Concept {
            name: Name::new(n),
            property: Name::new(DEFAULT_PROPERTY),
            values: vec![Name::new("v")],
        };
        let onto = Ontology {
            regulations: vec![Regulation {
                name: Name::new("reg"),
                contexts: vec![Context {
                    name: Name::new("ctx"),
                    concepts: vec![concept("الإعلان"), concept(" الاعلان ")],
                }],
            }],
        };
        let issues = onto.validate();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].code, IssueCode::DuplicateName);
        assert_eq!(
            issues[0].path,
            "/KSA_Civil_Ontology/OntParent[1]/OntChild[1]/OntConcept[2]"
        );
    }
}
