//! Authoring edits over the ontology and the rulebase.
//!
//! Edits are pure: they take the current value and return a new one, leaving
//! the input untouched. Every result goes through the same validation as a
//! freshly parsed document, so an accepted edit can never produce a KB the
//! loader would reject. Renames do not cascade into rules; lint reports the
//! dangling references instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::issue::{IssueCode, ParseIssue};
use crate::model::{
    Concept, Context, Finding, Model, Name, Ontology, Polarity, Regulation, Rule, RuleBase,
    DEFAULT_PROPERTY,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EditError {
    #[error("path not found: {0}")]
    PathNotFound(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("cannot delete the last value of a concept: {0}")]
    LastValue(String),
    #[error("rule would have no findings: {0}")]
    EmptyRule(String),
    #[error("rule would test the same slot twice: {0}")]
    DuplicateSlot(String),
    #[error("concept would have no values: {0}")]
    EmptyDomain(String),
    #[error("empty name: {0}")]
    EmptyName(String),
    #[error("malformed edit: {0}")]
    InvalidEdit(String),
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::PathNotFound(_) => "PathNotFound",
            EditError::DuplicateName(_) => "DuplicateName",
            EditError::LastValue(_) => "LastValue",
            EditError::EmptyRule(_) => "EmptyRule",
            EditError::DuplicateSlot(_) => "DuplicateSlot",
            EditError::EmptyDomain(_) => "EmptyDomain",
            EditError::EmptyName(_) => "EmptyName",
            EditError::InvalidEdit(_) => "InvalidEdit",
        }
    }

    fn from_issue(issue: &ParseIssue) -> Self {
        let detail = format!("{} ({})", issue.message, issue.path);
        match issue.code {
            IssueCode::DuplicateName => EditError::DuplicateName(detail),
            IssueCode::EmptyRule => EditError::EmptyRule(detail),
            IssueCode::DuplicateSlot => EditError::DuplicateSlot(detail),
            IssueCode::EmptyDomain => EditError::EmptyDomain(detail),
            IssueCode::EmptyName => EditError::EmptyName(detail),
            _ => EditError::InvalidEdit(detail),
        }
    }
}

fn first_error(issues: Vec<ParseIssue>) -> Result<(), EditError> {
    match issues.iter().find(|i| i.is_error()) {
        Some(issue) => Err(EditError::from_issue(issue)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OntologyEditKind {
    AddRegulation,
    AddContext,
    AddConcept,
    AddValue,
    Rename,
    Delete,
}

/// `regulation[/context[/concept[/value]]]`; later levels require earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyPath {
    pub regulation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl OntologyPath {
    fn depth(&self) -> Result<usize, EditError> {
        match (&self.context, &self.concept, &self.value) {
            (None, None, None) => Ok(1),
            (Some(_), None, None) => Ok(2),
            (Some(_), Some(_), None) => Ok(3),
            (Some(_), Some(_), Some(_)) => Ok(4),
            _ => Err(EditError::InvalidEdit(format!(
                "gap in ontology path {self}"
            ))),
        }
    }
}

impl std::fmt::Display for OntologyPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.regulation)?;
        for part in [&self.context, &self.concept, &self.value]
            .into_iter()
            .flatten()
        {
            write!(f, " / {part}")?;
        }
        Ok(())
    }
}

/// One ontology change. For `add-*` kinds the path ends at the new node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyEdit {
    pub kind: OntologyEditKind,
    pub path: OntologyPath,
    /// New name, for `rename`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Initial value domain, for `add-concept`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    /// Property name, for `add-concept`; defaults to `Value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleEditKind {
    AddModel,
    AddRule,
    AddFinding,
    SetConsequent,
    Rename,
    Delete,
}

/// `model[/rule[/finding index]]`. The finding index is zero-based.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulePath {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finding: Option<usize>,
}

impl RulePath {
    fn depth(&self) -> Result<usize, EditError> {
        match (&self.rule, &self.finding) {
            (None, None) => Ok(1),
            (Some(_), None) => Ok(2),
            (Some(_), Some(_)) => Ok(3),
            _ => Err(EditError::InvalidEdit(format!("gap in rule path {self}"))),
        }
    }
}

impl std::fmt::Display for RulePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.model)?;
        if let Some(rule) = &self.rule {
            write!(f, " / {rule}")?;
        }
        if let Some(i) = self.finding {
            write!(f, " / #{i}")?;
        }
        Ok(())
    }
}

fn default_property() -> String {
    DEFAULT_PROPERTY.to_owned()
}

fn default_polarity() -> Polarity {
    Polarity::MustEqual
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingSpec {
    pub concept: String,
    #[serde(default = "default_property")]
    pub property: String,
    pub value: String,
    #[serde(default = "default_polarity")]
    pub polarity: Polarity,
}

impl FindingSpec {
    fn build(&self) -> Finding {
        Finding {
            concept: Name::new(self.concept.as_str()),
            property: Name::new(self.property.as_str()),
            value: Name::new(self.value.as_str()),
            polarity: self.polarity,
        }
    }
}

/// One rulebase change. For `add-model` / `add-rule` the path ends at the new node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEdit {
    pub kind: RuleEditKind,
    pub path: RulePath,
    /// New name, for `rename`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// For `add-rule` and `set-consequent`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consequent: Option<String>,
    /// Antecedent of a new rule, for `add-rule`; must not be empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<FindingSpec>,
    /// For `add-finding`: appended, or inserted at `path.finding` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finding: Option<FindingSpec>,
}

/// An entry of an edit file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "lowercase")]
pub enum EditRecord {
    Ontology(OntologyEdit),
    Rules(RuleEdit),
}

fn not_found(what: &str, path: &dyn std::fmt::Display) -> EditError {
    EditError::PathNotFound(format!("{what} in {path}"))
}

fn position<T>(items: &[T], name: &str, key: impl Fn(&T) -> &Name) -> Option<usize> {
    let wanted = Name::new(name);
    items.iter().position(|item| key(item).same_as(&wanted))
}

fn require<'a>(value: &'a Option<String>, what: &str) -> Result<&'a str, EditError> {
    value
        .as_deref()
        .ok_or_else(|| EditError::InvalidEdit(format!("missing {what}")))
}

/// Applies `edit` to a copy of `ontology`.
pub fn apply_ontology_edit(
    ontology: &Ontology,
    edit: &OntologyEdit,
) -> Result<Ontology, EditError> {
    use OntologyEditKind as K;

    let path = &edit.path;
    let depth = path.depth()?;
    let expected_depth = match edit.kind {
        K::AddRegulation => Some(1),
        K::AddContext => Some(2),
        K::AddConcept => Some(3),
        K::AddValue => Some(4),
        K::Rename | K::Delete => None,
    };
    if expected_depth.is_some_and(|d| d != depth) {
        return Err(EditError::InvalidEdit(format!(
            "{:?} needs a path of depth {}, got {depth}",
            edit.kind,
            expected_depth.unwrap_or_default()
        )));
    }

    let mut out = ontology.clone();

    // Resolve every level above the leaf; the leaf itself is resolved below.
    let regs = &mut out.regulations;
    let reg_idx = position(regs, &path.regulation, |r| &r.name);
    if depth == 1 {
        return finish_ontology(
            edit,
            out,
            reg_idx,
            |o| &mut o.regulations,
            |name| Regulation {
                name,
                contexts: Vec::new(),
            },
        );
    }
    let ri = reg_idx.ok_or_else(|| not_found("regulation", path))?;
    let ctx_name = path.context.as_deref().unwrap_or_default();
    let ctx_idx = position(&regs[ri].contexts, ctx_name, |c| &c.name);
    if depth == 2 {
        return finish_ontology(
            edit,
            out,
            ctx_idx,
            move |o| &mut o.regulations[ri].contexts,
            |name| Context {
                name,
                concepts: Vec::new(),
            },
        );
    }
    let ci = ctx_idx.ok_or_else(|| not_found("context", path))?;
    let concept_name = path.concept.as_deref().unwrap_or_default();
    let concept_idx = position(&regs[ri].contexts[ci].concepts, concept_name, |c| &c.name);
    if depth == 3 {
        if edit.kind == K::AddConcept && edit.values.is_empty() {
            return Err(EditError::EmptyDomain(format!(
                "add-concept {path} needs at least one value"
            )));
        }
        let values: Vec<Name> = edit.values.iter().map(|v| Name::new(v.as_str())).collect();
        let property = Name::new(edit.property.as_deref().unwrap_or(DEFAULT_PROPERTY));
        return finish_ontology(
            edit,
            out,
            concept_idx,
            move |o| &mut o.regulations[ri].contexts[ci].concepts,
            move |name| Concept {
                name,
                property,
                values,
            },
        );
    }
    let ki = concept_idx.ok_or_else(|| not_found("concept", path))?;
    let value_name = path.value.as_deref().unwrap_or_default();
    let value_idx = position(
        &regs[ri].contexts[ci].concepts[ki].values,
        value_name,
        |v| v,
    );
    if edit.kind == K::Delete
        && value_idx.is_some()
        && regs[ri].contexts[ci].concepts[ki].values.len() == 1
    {
        return Err(EditError::LastValue(path.to_string()));
    }
    finish_ontology(
        edit,
        out,
        value_idx,
        move |o| &mut o.regulations[ri].contexts[ci].concepts[ki].values,
        |name| name,
    )
}

/// Applies the leaf-level part of an ontology edit on `siblings(out)`.
fn finish_ontology<T>(
    edit: &OntologyEdit,
    mut out: Ontology,
    leaf: Option<usize>,
    siblings: impl FnOnce(&mut Ontology) -> &mut Vec<T>,
    make: impl FnOnce(Name) -> T,
) -> Result<Ontology, EditError>
where
    T: Renameable,
{
    use OntologyEditKind as K;
    let path = &edit.path;
    let leaf_name = [&path.value, &path.concept, &path.context]
        .into_iter()
        .flatten()
        .next()
        .cloned()
        .unwrap_or_else(|| path.regulation.clone());
    let list = siblings(&mut out);
    match edit.kind {
        K::AddRegulation | K::AddContext | K::AddConcept | K::AddValue => {
            if leaf.is_some() {
                return Err(EditError::DuplicateName(path.to_string()));
            }
            list.push(make(Name::new(leaf_name)));
        }
        K::Rename => {
            let i = leaf.ok_or_else(|| not_found("node", path))?;
            list[i].rename(Name::new(require(&edit.name, "name")?));
        }
        K::Delete => {
            let i = leaf.ok_or_else(|| not_found("node", path))?;
            list.remove(i);
        }
    }
    first_error(out.validate())?;
    Ok(out)
}

trait Renameable {
    fn rename(&mut self, name: Name);
}

impl Renameable for Regulation {
    fn rename(&mut self, name: Name) {
        self.name = name;
    }
}

impl Renameable for Context {
    fn rename(&mut self, name: Name) {
        self.name = name;
    }
}

impl Renameable for Concept {
    fn rename(&mut self, name: Name) {
        self.name = name;
    }
}

impl Renameable for Name {
    fn rename(&mut self, name: Name) {
        *self = name;
    }
}

/// Applies `edit` to a copy of `rulebase`.
pub fn apply_rule_edit(rulebase: &RuleBase, edit: &RuleEdit) -> Result<RuleBase, EditError> {
    use RuleEditKind as K;

    let path = &edit.path;
    let depth = path.depth()?;
    let allowed: &[usize] = match edit.kind {
        K::AddModel => &[1],
        K::AddRule | K::SetConsequent => &[2],
        K::AddFinding => &[2, 3],
        K::Rename => &[1, 2],
        K::Delete => &[1, 2, 3],
    };
    if !allowed.contains(&depth) {
        return Err(EditError::InvalidEdit(format!(
            "{:?} cannot target a path of depth {depth}",
            edit.kind
        )));
    }

    let mut out = rulebase.clone();
    let model_idx = position(&out.models, &path.model, |m| &m.name);

    if edit.kind == K::AddModel {
        if model_idx.is_some() {
            return Err(EditError::DuplicateName(path.to_string()));
        }
        out.models.push(Model {
            name: Name::new(path.model.as_str()),
            rules: Vec::new(),
        });
        first_error(out.validate())?;
        return Ok(out);
    }

    let mi = model_idx.ok_or_else(|| not_found("model", path))?;
    if depth == 1 {
        match edit.kind {
            K::Rename => out.models[mi].name = Name::new(require(&edit.name, "name")?),
            K::Delete => {
                out.models.remove(mi);
            }
            _ => unreachable!("depth checked above"),
        }
        first_error(out.validate())?;
        return Ok(out);
    }

    let rule_name = path.rule.as_deref().unwrap_or_default();
    let rules = &mut out.models[mi].rules;
    let rule_idx = position(rules, rule_name, |r| &r.name);

    if edit.kind == K::AddRule {
        if rule_idx.is_some() {
            return Err(EditError::DuplicateName(path.to_string()));
        }
        if edit.findings.is_empty() {
            return Err(EditError::EmptyRule(path.to_string()));
        }
        rules.push(Rule {
            name: Name::new(rule_name),
            consequent: Name::new(require(&edit.consequent, "consequent")?),
            findings: edit.findings.iter().map(FindingSpec::build).collect(),
        });
        first_error(out.validate())?;
        return Ok(out);
    }

    let ri = rule_idx.ok_or_else(|| not_found("rule", path))?;
    let rule = &mut rules[ri];
    match (edit.kind, path.finding) {
        (K::SetConsequent, _) => {
            rule.consequent = Name::new(require(&edit.consequent, "consequent")?);
        }
        (K::Rename, _) => rule.name = Name::new(require(&edit.name, "name")?),
        (K::AddFinding, at) => {
            let spec = edit
                .finding
                .as_ref()
                .ok_or_else(|| EditError::InvalidEdit("missing finding".into()))?;
            let at = at.unwrap_or(rule.findings.len());
            if at > rule.findings.len() {
                return Err(not_found("finding index", path));
            }
            rule.findings.insert(at, spec.build());
        }
        (K::Delete, None) => {
            rules.remove(ri);
        }
        (K::Delete, Some(fi)) => {
            if fi >= rule.findings.len() {
                return Err(not_found("finding", path));
            }
            rule.findings.remove(fi);
        }
        (K::AddModel | K::AddRule, _) => unreachable!("handled above"),
    }
    first_error(out.validate())?;
    Ok(out)
}

/// Applies a batch in order; stops at the first rejected edit (zero-based index).
pub fn apply_edits(
    ontology: &Ontology,
    rulebase: &RuleBase,
    edits: &[EditRecord],
) -> Result<(Ontology, RuleBase), (usize, EditError)> {
    let mut ontology = ontology.clone();
    let mut rulebase = rulebase.clone();
    for (i, record) in edits.iter().enumerate() {
        match record {
            EditRecord::Ontology(e) => {
                ontology = apply_ontology_edit(&ontology, e).map_err(|err| (i, err))?
            }
            EditRecord::Rules(e) => {
                rulebase = apply_rule_edit(&rulebase, e).map_err(|err| (i, err))?
            }
        }
    }
    Ok((ontology, rulebase))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onto_path(parts: &[&str]) -> OntologyPath {
        let get = |i: usize| parts.get(i).map(|s| s.to_string());
        OntologyPath {
            regulation: parts[0].to_owned(),
            context: get(1),
            concept: get(2),
            value: get(3),
        }
    }

    fn sample() -> Ontology {
        let mut o = Ontology::default();
        for edit in [
            OntologyEdit {
                kind: OntologyEditKind::AddRegulation,
                path: onto_path(&["r"]),
                name: None,
                values: vec![],
                property: None,
            },
            OntologyEdit {
                kind: OntologyEditKind::AddContext,
                path: onto_path(&["r", "c"]),
                name: None,
                values: vec![],
                property: None,
            },
            OntologyEdit {
                kind: OntologyEditKind::AddConcept,
                path: onto_path(&["r", "c", "k"]),
                name: None,
                values: vec!["v1".into()],
                property: None,
            },
        ] {
            o = apply_ontology_edit(&o, &edit).unwrap();
        }
        o
    }

    #[test]
    fn builds_tree_from_edits() {
        let o = sample();
        assert_eq!(
            o.regulations[0].contexts[0].concepts[0].value_domain(),
            vec!["v1"]
        );
    }

    #[test]
    fn depth_mismatch_is_invalid() {
        let err = apply_ontology_edit(
            &sample(),
            &OntologyEdit {
                kind: OntologyEditKind::AddValue,
                path: onto_path(&["r", "c"]),
                name: None,
                values: vec![],
                property: None,
            },
        )
        .unwrap_err();
        assert_eq!(err.code(), "InvalidEdit");
    }

    #[test]
    fn concept_needs_values() {
        let err = apply_ontology_edit(
            &sample(),
            &OntologyEdit {
                kind: OntologyEditKind::AddConcept,
                path: onto_path(&["r", "c", "k2"]),
                name: None,
                values: vec![],
                property: None,
            },
        )
        .unwrap_err();
        assert_eq!(err.code(), "EmptyDomain");
    }

    #[test]
    fn rename_collision_is_duplicate() {
        let o = apply_ontology_edit(
            &sample(),
            &OntologyEdit {
                kind: OntologyEditKind::AddValue,
                path: onto_path(&["r", "c", "k", "v2"]),
                name: None,
                values: vec![],
                property: None,
            },
        )
        .unwrap();
        let err = apply_ontology_edit(
            &o,
            &OntologyEdit {
                kind: OntologyEditKind::Rename,
                path: onto_path(&["r", "c", "k", "v2"]),
                name: Some("V1".into()),
                values: vec![],
                property: None,
            },
        )
        .unwrap_err();
        assert_eq!(err.code(), "DuplicateName");
    }

    #[test]
    fn edit_records_parse_from_json() {
        let json = r#"[
            {"target":"ontology","kind":"add-value","path":{"regulation":"r","context":"c","concept":"k","value":"v2"}},
            {"target":"rules","kind":"add-model","path":{"model":"m"}},
            {"target":"rules","kind":"add-rule","path":{"model":"m","rule":"R1"},"consequent":"c",
             "findings":[{"concept":"k","value":"v2"},{"concept":"j","value":"x","polarity":"must-differ"}]}
        ]"#;
        let edits: Vec<EditRecord> = serde_json::from_str(json).unwrap();
        let (o, rb) = apply_edits(&sample(), &RuleBase::default(), &edits).unwrap();
        assert_eq!(o.regulations[0].contexts[0].concepts[0].values.len(), 2);
        assert_eq!(
            rb.models[0].rules[0].findings[1].polarity,
            Polarity::MustDiffer
        );
        assert_eq!(rb.models[0].rules[0].findings[0].property.text(), "Value");
    }

    #[test]
    fn batch_reports_failing_index() {
        let edits = vec![
            EditRecord::Rules(RuleEdit {
                kind: RuleEditKind::AddModel,
                path: RulePath {
                    model: "m".into(),
                    ..Default::default()
                },
                name: None,
                consequent: None,
                findings: vec![],
                finding: None,
            }),
            EditRecord::Rules(RuleEdit {
                kind: RuleEditKind::AddModel,
                path: RulePath {
                    model: "M".into(),
                    ..Default::default()
                },
                name: None,
                consequent: None,
                findings: vec![],
                finding: None,
            }),
        ];
        let (i, err) = apply_edits(&Ontology::default(), &RuleBase::default(), &edits).unwrap_err();
        assert_eq!(i, 1);
        assert_eq!(err.code(), "DuplicateName");
    }
}
