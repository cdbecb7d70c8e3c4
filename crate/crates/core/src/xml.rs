//! Reading and canonical writing of the ontology and rulebase documents.
//!
//! Reading happens in two phases: a well-formedness pass that builds a small
//! element tree (with element paths), then a schema pass that maps the tree
//! onto [`Ontology`] / [`RuleBase`] and runs the model validation.
//!
//! The canonical writer emits UTF-8 without an XML declaration, two-space
//! indentation, one element per line, schema-ordered double-quoted attributes,
//! self-closing leaves and a trailing newline. Its output is a fixed point of
//! parse-then-serialize.

use std::collections::HashMap;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::issue::{has_errors, IssueCode, ParseIssue};
use crate::lexicon::NormalizationPolicy;
use crate::model::{
    Concept, Context, Finding, Model, Name, Ontology, Polarity, Regulation, Rule, RuleBase,
    DEFAULT_PROPERTY,
};

/// Element and attribute names of the two document formats.
pub mod elements {
    pub const ONTOLOGY_ROOT: &str = "KSA_Civil_Ontology";
    pub const REGULATION: &str = "OntParent";
    pub const REGULATION_NAME: &str = "ParentName";
    pub const CONTEXT: &str = "OntChild";
    pub const CONTEXT_NAME: &str = "ChildName";
    pub const CONCEPT: &str = "OntConcept";
    pub const CONCEPT_NAME: &str = "ConceptName";
    /// Optional; only written when the property is not `Value`.
    pub const CONCEPT_PROPERTY: &str = "Property";
    pub const VALUE: &str = "OntVal";
    pub const VALUE_NAME: &str = "ValueName";

    pub const RULES_ROOT: &str = "KSA_Civil_Regulation";
    pub const MODEL: &str = "Model";
    pub const MODEL_NAME: &str = "ModelName";
    pub const RULE: &str = "Rule";
    pub const RULE_NAME: &str = "Name";
    pub const RULE_CONSEQUENT: &str = "RegItem";
    pub const RULE_COUNTER: &str = "NoTrueFinding";
    pub const RULE_COUNTER_ALT: &str = "NoTrueFindings";
    pub const FINDING: &str = "Finding";
    pub const FINDING_CONCEPT: &str = "Cpt";
    pub const FINDING_PROPERTY: &str = "Prop";
    pub const FINDING_VALUE: &str = "Val";
    pub const FINDING_POLARITY: &str = "Equal";
    pub const FINDING_MIRROR: &str = "ExistInWM";
}

use elements as el;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Ontology,
    Rulebase,
}

/// Canonical bytes of one knowledge document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalDocument {
    pub kind: DocumentKind,
    pub bytes: Vec<u8>,
}

impl CanonicalDocument {
    pub fn as_str(&self) -> &str {
        // The writer only ever pushes &str data.
        std::str::from_utf8(&self.bytes).expect("canonical documents are UTF-8")
    }
}

/// Parsed value (if no error was found) together with every issue, warnings included.
#[derive(Debug, Clone)]
pub struct ParseOutcome<T> {
    pub value: Option<T>,
    pub issues: Vec<ParseIssue>,
}

impl<T> ParseOutcome<T> {
    pub fn into_result(self) -> Result<T, Vec<ParseIssue>> {
        match self.value {
            Some(v) => Ok(v),
            None => Err(self.issues),
        }
    }

    fn failed(issues: Vec<ParseIssue>) -> Self {
        Self {
            value: None,
            issues,
        }
    }
}

pub fn parse_ontology(bytes: &[u8]) -> Result<Ontology, Vec<ParseIssue>> {
    parse_ontology_with(bytes, &NormalizationPolicy::default()).into_result()
}

pub fn parse_rulebase(bytes: &[u8]) -> Result<RuleBase, Vec<ParseIssue>> {
    parse_rulebase_with(bytes, &NormalizationPolicy::default()).into_result()
}

pub fn parse_ontology_with(bytes: &[u8], policy: &NormalizationPolicy) -> ParseOutcome<Ontology> {
    let root = match read_tree(bytes) {
        Ok(root) => root,
        Err(issue) => return ParseOutcome::failed(vec![issue]),
    };
    let mut issues = Vec::new();
    let ontology = build_ontology(&root, policy, &mut issues);
    finish(ontology, issues, Ontology::validate)
}

pub fn parse_rulebase_with(bytes: &[u8], policy: &NormalizationPolicy) -> ParseOutcome<RuleBase> {
    let root = match read_tree(bytes) {
        Ok(root) => root,
        Err(issue) => return ParseOutcome::failed(vec![issue]),
    };
    let mut issues = Vec::new();
    let rulebase = build_rulebase(&root, policy, &mut issues);
    finish(rulebase, issues, RuleBase::validate)
}

fn finish<T>(
    value: Option<T>,
    mut issues: Vec<ParseIssue>,
    validate: impl Fn(&T) -> Vec<ParseIssue>,
) -> ParseOutcome<T> {
    // Structural errors drop nodes, which would shift the sibling indices the
    // validator derives its paths from; validate only complete trees.
    let value = match value {
        Some(v) if !has_errors(&issues) => {
            issues.extend(validate(&v));
            Some(v)
        }
        _ => None,
    };
    let value = value.filter(|_| !has_errors(&issues));
    ParseOutcome { value, issues }
}

// ---------------------------------------------------------------------------
// Well-formedness pass
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct RawElement {
    name: String,
    path: String,
    attrs: Vec<(String, String)>,
    children: Vec<RawElement>,
    has_text: bool,
    sibling_counts: HashMap<String, usize>,
}

impl RawElement {
    fn open(start: &BytesStart<'_>, parent: Option<&mut RawElement>) -> Result<Self, String> {
        let name = std::str::from_utf8(start.name().as_ref())
            .map_err(|e| e.to_string())?
            .to_owned();
        let path = match parent {
            Some(p) => {
                let n = p.sibling_counts.entry(name.clone()).or_default();
                *n += 1;
                format!("{}/{}[{}]", p.path, name, n)
            }
            None => format!("/{name}"),
        };
        let mut attrs = Vec::new();
        for attr in start.attributes() {
            let attr = attr.map_err(|e| format!("bad attribute: {e}"))?;
            let key = std::str::from_utf8(attr.key.as_ref())
                .map_err(|e| e.to_string())?
                .to_owned();
            let value = attr
                .unescape_value()
                .map_err(|e| format!("bad attribute value for {key}: {e}"))?
                .into_owned();
            attrs.push((key, value));
        }
        Ok(Self {
            name,
            path,
            attrs,
            children: Vec::new(),
            has_text: false,
            sibling_counts: HashMap::new(),
        })
    }
}

fn wf(path: &str, message: impl Into<String>) -> ParseIssue {
    ParseIssue::error(IssueCode::WellFormedness, path, message)
}

fn read_tree(bytes: &[u8]) -> Result<RawElement, ParseIssue> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| wf("/", format!("document is not valid UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut reader = Reader::from_str(text);
    let config = reader.config_mut();
    config.trim_text(true);
    // End-tag names are compared case-insensitively below.
    config.check_end_names = false;

    let mut stack: Vec<RawElement> = Vec::new();
    let mut root: Option<RawElement> = None;

    let here = |stack: &[RawElement]| {
        stack
            .last()
            .map(|e| e.path.clone())
            .unwrap_or_else(|| "/".to_owned())
    };

    loop {
        let event = reader.read_event().map_err(|e| {
            wf(
                &here(&stack),
                format!("{e} (byte {})", reader.error_position()),
            )
        })?;
        match event {
            Event::Start(ref start) | Event::Empty(ref start) => {
                if stack.is_empty() && root.is_some() {
                    return Err(wf("/", "document has more than one root element"));
                }
                let elem = RawElement::open(start, stack.last_mut())
                    .map_err(|msg| wf(&here(&stack), msg))?;
                if matches!(event, Event::Start(_)) {
                    stack.push(elem);
                } else {
                    attach(&mut stack, &mut root, elem);
                }
            }
            Event::End(end) => {
                let name = String::from_utf8_lossy(end.name().as_ref()).into_owned();
                let Some(elem) = stack.pop() else {
                    return Err(wf("/", format!("unexpected closing tag </{name}>")));
                };
                if !elem.name.eq_ignore_ascii_case(&name) {
                    return Err(wf(
                        &elem.path,
                        format!("closing tag </{name}> does not match <{}>", elem.name),
                    ));
                }
                attach(&mut stack, &mut root, elem);
            }
            Event::Text(t) => {
                let content = t.unescape().map_err(|e| wf(&here(&stack), e.to_string()))?;
                if !content.trim().is_empty() {
                    match stack.last_mut() {
                        Some(top) => top.has_text = true,
                        None => return Err(wf("/", "text outside the root element")),
                    }
                }
            }
            Event::CData(c) => {
                if !c.is_empty() {
                    match stack.last_mut() {
                        Some(top) => top.has_text = true,
                        None => return Err(wf("/", "CDATA outside the root element")),
                    }
                }
            }
            Event::Decl(decl) => {
                if let Some(enc) = decl.encoding() {
                    let enc = enc.map_err(|e| wf("/", e.to_string()))?;
                    let enc = String::from_utf8_lossy(&enc).to_ascii_lowercase();
                    if enc != "utf-8" && enc != "utf8" {
                        return Err(wf(
                            "/",
                            format!("unsupported encoding {enc:?}, expected UTF-8"),
                        ));
                    }
                }
            }
            Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Eof => break,
        }
    }
    if let Some(open) = stack.last() {
        return Err(wf(
            &open.path,
            format!("element <{}> is never closed", open.name),
        ));
    }
    root.ok_or_else(|| wf("/", "document has no root element"))
}

fn attach(stack: &mut [RawElement], root: &mut Option<RawElement>, elem: RawElement) {
    match stack.last_mut() {
        Some(parent) => parent.children.push(elem),
        None => *root = Some(elem),
    }
}

// ---------------------------------------------------------------------------
// Schema pass
// ---------------------------------------------------------------------------

/// Attribute lookup for one element; reports unknown attributes and text content.
struct Attrs<'a> {
    elem: &'a RawElement,
}

impl<'a> Attrs<'a> {
    fn new(elem: &'a RawElement, known: &[&str], issues: &mut Vec<ParseIssue>) -> Self {
        for (key, _) in &elem.attrs {
            if !known.contains(&key.as_str()) {
                issues.push(ParseIssue::warning(
                    IssueCode::UnknownAttribute,
                    &elem.path,
                    format!("unknown attribute {key} on <{}>", elem.name),
                ));
            }
        }
        if elem.has_text {
            issues.push(ParseIssue::error(
                IssueCode::UnexpectedText,
                &elem.path,
                format!("<{}> must not contain text", elem.name),
            ));
        }
        Self { elem }
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.elem
            .attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str, issues: &mut Vec<ParseIssue>) -> Option<&'a str> {
        let value = self.get(key);
        if value.is_none() {
            issues.push(ParseIssue::error(
                IssueCode::AttributeMissing,
                &self.elem.path,
                format!("<{}> requires attribute {key}", self.elem.name),
            ));
        }
        value
    }
}

fn expect_root(root: &RawElement, name: &str, issues: &mut Vec<ParseIssue>) -> bool {
    if root.name != name {
        issues.push(ParseIssue::error(
            IssueCode::UnknownElement,
            &root.path,
            format!("expected root <{name}>, found <{}>", root.name),
        ));
        return false;
    }
    true
}

/// Children named `name`; any other child is reported as unknown.
fn children_named<'a>(
    parent: &'a RawElement,
    name: &str,
    issues: &mut Vec<ParseIssue>,
) -> Vec<&'a RawElement> {
    let mut out = Vec::new();
    for child in &parent.children {
        if child.name == name {
            out.push(child);
        } else {
            issues.push(ParseIssue::error(
                IssueCode::UnknownElement,
                &child.path,
                format!("unexpected <{}> inside <{}>", child.name, parent.name),
            ));
        }
    }
    out
}

fn reject_children(leaf: &RawElement, issues: &mut Vec<ParseIssue>) {
    children_named(leaf, "", issues);
}

fn build_ontology(
    root: &RawElement,
    policy: &NormalizationPolicy,
    issues: &mut Vec<ParseIssue>,
) -> Option<Ontology> {
    if !expect_root(root, el::ONTOLOGY_ROOT, issues) {
        return None;
    }
    Attrs::new(root, &[], issues);
    let name = |s: &str| Name::with_policy(s, policy);

    let mut ontology = Ontology::default();
    for reg_el in children_named(root, el::REGULATION, issues) {
        let attrs = Attrs::new(reg_el, &[el::REGULATION_NAME], issues);
        let reg_name = attrs.require(el::REGULATION_NAME, issues);
        let mut contexts = Vec::new();
        for ctx_el in children_named(reg_el, el::CONTEXT, issues) {
            let attrs = Attrs::new(ctx_el, &[el::CONTEXT_NAME], issues);
            let ctx_name = attrs.require(el::CONTEXT_NAME, issues);
            let mut concepts = Vec::new();
            for c_el in children_named(ctx_el, el::CONCEPT, issues) {
                let attrs = Attrs::new(c_el, &[el::CONCEPT_NAME, el::CONCEPT_PROPERTY], issues);
                let c_name = attrs.require(el::CONCEPT_NAME, issues);
                let property = attrs.get(el::CONCEPT_PROPERTY).unwrap_or(DEFAULT_PROPERTY);
                let mut values = Vec::new();
                for v_el in children_named(c_el, el::VALUE, issues) {
                    let attrs = Attrs::new(v_el, &[el::VALUE_NAME], issues);
                    reject_children(v_el, issues);
                    if let Some(v) = attrs.require(el::VALUE_NAME, issues) {
                        values.push(name(v));
                    }
                }
                if let Some(c) = c_name {
                    concepts.push(Concept {
                        name: name(c),
                        property: name(property),
                        values,
                    });
                }
            }
            if let Some(c) = ctx_name {
                contexts.push(Context {
                    name: name(c),
                    concepts,
                });
            }
        }
        if let Some(r) = reg_name {
            ontology.regulations.push(Regulation {
                name: name(r),
                contexts,
            });
        }
    }
    Some(ontology)
}

fn build_rulebase(
    root: &RawElement,
    policy: &NormalizationPolicy,
    issues: &mut Vec<ParseIssue>,
) -> Option<RuleBase> {
    if !expect_root(root, el::RULES_ROOT, issues) {
        return None;
    }
    Attrs::new(root, &[], issues);
    let name = |s: &str| Name::with_policy(s, policy);

    let mut rulebase = RuleBase::default();
    for m_el in children_named(root, el::MODEL, issues) {
        let attrs = Attrs::new(m_el, &[el::MODEL_NAME], issues);
        let model_name = attrs.require(el::MODEL_NAME, issues);
        let mut rules = Vec::new();
        for r_el in children_named(m_el, el::RULE, issues) {
            let attrs = Attrs::new(
                r_el,
                &[
                    el::RULE_NAME,
                    el::RULE_CONSEQUENT,
                    el::RULE_COUNTER,
                    el::RULE_COUNTER_ALT,
                ],
                issues,
            );
            let rule_name = attrs.require(el::RULE_NAME, issues);
            let consequent = attrs.require(el::RULE_CONSEQUENT, issues);
            // Persisted counters are session state; they are dropped here.
            let mut findings = Vec::new();
            for f_el in children_named(r_el, el::FINDING, issues) {
                let attrs = Attrs::new(
                    f_el,
                    &[
                        el::FINDING_CONCEPT,
                        el::FINDING_PROPERTY,
                        el::FINDING_VALUE,
                        el::FINDING_POLARITY,
                        el::FINDING_MIRROR,
                    ],
                    issues,
                );
                reject_children(f_el, issues);
                let concept = attrs.require(el::FINDING_CONCEPT, issues);
                let property = attrs.require(el::FINDING_PROPERTY, issues);
                let value = attrs.require(el::FINDING_VALUE, issues);
                let polarity = attrs.require(el::FINDING_POLARITY, issues).and_then(|p| {
                    let parsed = Polarity::from_attr(p);
                    if parsed.is_none() {
                        issues.push(ParseIssue::error(
                            IssueCode::BadPolarity,
                            &f_el.path,
                            format!("{} must be Yes or No, found {p:?}", el::FINDING_POLARITY),
                        ));
                    }
                    parsed
                });
                if let (Some(c), Some(p), Some(v), Some(pol)) = (concept, property, value, polarity)
                {
                    findings.push(Finding {
                        concept: name(c),
                        property: name(p),
                        value: name(v),
                        polarity: pol,
                    });
                }
            }
            if let (Some(n), Some(c)) = (rule_name, consequent) {
                rules.push(Rule {
                    name: name(n),
                    consequent: name(c),
                    findings,
                });
            }
        }
        if let Some(m) = model_name {
            rulebase.models.push(Model {
                name: name(m),
                rules,
            });
        }
    }
    Some(rulebase)
}

// ---------------------------------------------------------------------------
// Canonical writer
// ---------------------------------------------------------------------------

struct Writer {
    out: String,
}

impl Writer {
    fn new() -> Self {
        Self { out: String::new() }
    }

    fn open(&mut self, depth: usize, name: &str, attrs: &[(&str, &str)], leaf: bool) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push('<');
        self.out.push_str(name);
        for (key, value) in attrs {
            self.out.push(' ');
            self.out.push_str(key);
            self.out.push_str("=\"");
            escape_attr_into(&mut self.out, value);
            self.out.push('"');
        }
        self.out.push_str(if leaf { "/>\n" } else { ">\n" });
    }

    fn close(&mut self, depth: usize, name: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str("</");
        self.out.push_str(name);
        self.out.push_str(">\n");
    }

    fn finish(self, kind: DocumentKind) -> CanonicalDocument {
        CanonicalDocument {
            kind,
            bytes: self.out.into_bytes(),
        }
    }
}

fn escape_attr_into(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            other => out.push(other),
        }
    }
}

pub fn serialize_ontology(ontology: &Ontology) -> CanonicalDocument {
    let mut w = Writer::new();
    if ontology.regulations.is_empty() {
        w.open(0, el::ONTOLOGY_ROOT, &[], true);
        return w.finish(DocumentKind::Ontology);
    }
    w.open(0, el::ONTOLOGY_ROOT, &[], false);
    for reg in &ontology.regulations {
        let leaf = reg.contexts.is_empty();
        w.open(
            1,
            el::REGULATION,
            &[(el::REGULATION_NAME, reg.name.text())],
            leaf,
        );
        for ctx in &reg.contexts {
            let leaf = ctx.concepts.is_empty();
            w.open(2, el::CONTEXT, &[(el::CONTEXT_NAME, ctx.name.text())], leaf);
            for concept in &ctx.concepts {
                let mut attrs = vec![(el::CONCEPT_NAME, concept.name.text())];
                if concept.property.text() != DEFAULT_PROPERTY {
                    attrs.push((el::CONCEPT_PROPERTY, concept.property.text()));
                }
                let leaf = concept.values.is_empty();
                w.open(3, el::CONCEPT, &attrs, leaf);
                for value in &concept.values {
                    w.open(4, el::VALUE, &[(el::VALUE_NAME, value.text())], true);
                }
                if !leaf {
                    w.close(3, el::CONCEPT);
                }
            }
            if !leaf {
                w.close(2, el::CONTEXT);
            }
        }
        if !leaf {
            w.close(1, el::REGULATION);
        }
    }
    w.close(0, el::ONTOLOGY_ROOT);
    w.finish(DocumentKind::Ontology)
}

pub fn serialize_rulebase(rulebase: &RuleBase) -> CanonicalDocument {
    let mut w = Writer::new();
    if rulebase.models.is_empty() {
        w.open(0, el::RULES_ROOT, &[], true);
        return w.finish(DocumentKind::Rulebase);
    }
    w.open(0, el::RULES_ROOT, &[], false);
    for model in &rulebase.models {
        let leaf = model.rules.is_empty();
        w.open(1, el::MODEL, &[(el::MODEL_NAME, model.name.text())], leaf);
        for rule in &model.rules {
            let attrs = [
                (el::RULE_NAME, rule.name.text()),
                (el::RULE_CONSEQUENT, rule.consequent.text()),
                (el::RULE_COUNTER, "0"),
            ];
            let leaf = rule.findings.is_empty();
            w.open(2, el::RULE, &attrs, leaf);
            for f in &rule.findings {
                let attrs = [
                    (el::FINDING_CONCEPT, f.concept.text()),
                    (el::FINDING_PROPERTY, f.property.text()),
                    (el::FINDING_VALUE, f.value.text()),
                    (el::FINDING_POLARITY, f.polarity.as_attr()),
                    (el::FINDING_MIRROR, "No"),
                ];
                w.open(3, el::FINDING, &attrs, true);
            }
            if !leaf {
                w.close(2, el::RULE);
            }
        }
        if !leaf {
            w.close(1, el::MODEL);
        }
    }
    w.close(0, el::RULES_ROOT);
    w.finish(DocumentKind::Rulebase)
}
