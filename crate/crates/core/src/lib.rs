//! Rule-based consultation engine for regulation knowledge bases.
//!
//! A knowledge base is two XML documents: an ontology (regulations, decision
//! contexts, concepts and their value domains) and a rulebase (models of
//! `IF findings THEN consequent` rules). This crate loads and validates them,
//! checks that rules only use ontology vocabulary, and runs interactive
//! sessions that sort each rule into sure, expected or excluded as answers
//! come in.
//!
//! ```
//! use std::sync::Arc;
//! use rcses_core::{parse_ontology, parse_rulebase, KbSnapshot, SessionState};
//!
//! let ontology = parse_ontology(b"<KSA_Civil_Ontology/>").unwrap();
//! let rules = parse_rulebase(br#"<KSA_Civil_Regulation>
//!   <Model ModelName="m">
//!     <Rule Name="R1" RegItem="granted">
//!       <Finding Cpt="age" Prop="Value" Val="adult" Equal="Yes"/>
//!     </Rule>
//!   </Model>
//! </KSA_Civil_Regulation>"#).unwrap();
//! let kb = Arc::new(KbSnapshot::new(ontology, rules, 1).unwrap());
//!
//! let mut session = SessionState::new(kb, "m").unwrap();
//! session.assert_finding("age", "Value", "adult").unwrap();
//! assert_eq!(session.evaluate().sure_names(), vec!["R1"]);
//! ```

pub mod edit;
pub mod inference;
pub mod issue;
pub mod kbdir;
pub mod lexicon;
pub mod model;
pub mod snapshot;
pub mod xml;

pub use edit::{apply_edits, apply_ontology_edit, apply_rule_edit, EditError, EditRecord};
pub use inference::{
    render_trace_html, EvaluationResult, InferenceError, Question, RuleStatus, SessionState,
    StatusKind, Trace,
};
pub use issue::{IssueCode, ParseIssue};
pub use kbdir::{lint_kb, KbDir, KbDirError, LintOutcome};
pub use lexicon::{
    check_rulebase, normalize_text, suggest_corrections, LintCode, LintReport, NormalizationPolicy,
    Severity,
};
pub use model::{Concept, Finding, Model, Name, Ontology, Polarity, Rule, RuleBase};
pub use snapshot::KbSnapshot;
pub use xml::{
    parse_ontology, parse_ontology_with, parse_rulebase, parse_rulebase_with, serialize_ontology,
    serialize_rulebase, CanonicalDocument,
};
