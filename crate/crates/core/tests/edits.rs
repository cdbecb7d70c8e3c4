mod common;

use std::sync::Arc;

use common::*;
use rcses_core::kbdir::{LOCK_FILE, ONTOLOGY_FILE, RULES_FILE};
use rcses_core::{
    apply_edits, lint_kb, serialize_ontology, serialize_rulebase, EditError, EditRecord, KbDir,
    KbSnapshot, Name, NormalizationPolicy, SessionState,
};
use serde_json::json;

const REG: &str = "التعيين في الوظائف العامة";
const CTX: &str = "التوظيف في وظائف المرتبة السادسة حتي العاشرة - مؤقت";

fn edits(v: serde_json::Value) -> Vec<EditRecord> {
    serde_json::from_value(v).unwrap()
}

fn apply(
    v: serde_json::Value,
) -> Result<(rcses_core::Ontology, rcses_core::RuleBase), (usize, EditError)> {
    apply_edits(&fixture_ontology(), &fixture_rules(), &edits(v))
}

#[test]
fn add_value() {
    let (o, _) = apply(json!([{
        "target": "ontology", "kind": "add-value",
        "path": {"regulation": REG, "context": CTX, "concept": "الإعلان", "value": "معلق"}
    }]))
    .unwrap();
    let hit = &o.lookup_concept(Name::new("الإعلان").key())[0];
    assert_eq!(
        hit.concept.value_domain(),
        vec!["يوجد إعلان", "لا يوجد إعلان", "معلق"]
    );
}

#[test]
fn duplicate_concept_is_rejected() {
    let (i, err) = apply(json!([{
        "target": "ontology", "kind": "add-concept",
        "path": {"regulation": REG, "context": CTX, "concept": "الاعلان"},
        "values": ["x"]
    }]))
    .unwrap_err();
    assert_eq!(i, 0);
    assert_eq!(err.code(), "DuplicateName");
}

#[test]
fn delete_value_disappears_from_output() {
    let before = serialize_ontology(&fixture_ontology());
    let (o, _) = apply(json!([{
        "target": "ontology", "kind": "delete",
        "path": {"regulation": REG, "context": CTX, "concept": "الإعلان", "value": "يوجد إعلان"}
    }]))
    .unwrap();
    let after = serialize_ontology(&o);
    let removed: Vec<_> = before
        .as_str()
        .lines()
        .filter(|l| !after.as_str().lines().any(|a| a == *l))
        .collect();
    assert_eq!(removed, vec!["        <OntVal ValueName=\"يوجد إعلان\"/>"]);
    assert_eq!(
        before.as_str().lines().count(),
        after.as_str().lines().count() + 1
    );

    let (_, err) = apply_edits(
        &o,
        &fixture_rules(),
        &edits(json!([{
            "target": "ontology", "kind": "delete",
            "path": {"regulation": REG, "context": CTX, "concept": "الإعلان", "value": "لا يوجد إعلان"}
        }])),
    )
    .unwrap_err();
    assert_eq!(err.code(), "LastValue");
}

#[test]
fn add_rule_appends() {
    let (_, rb) = apply(json!([{
        "target": "rules", "kind": "add-rule",
        "path": {"model": MODEL, "rule": "R3"},
        "consequent": "إنهاء الخدمة بالعجز الصحي",
        "findings": [{"concept": "العجز الصحي", "value": "ثبوت العجز"}]
    }]))
    .unwrap();
    let names: Vec<_> = rb.models[0].rules.iter().map(|r| r.name.text()).collect();
    assert_eq!(names, vec!["R1", "R2", "R3"]);
    let xml = serialize_rulebase(&rb);
    assert!(xml
        .as_str()
        .contains("<Rule Name=\"R3\" RegItem=\"إنهاء الخدمة بالعجز الصحي\" NoTrueFinding=\"0\">"));
    assert!(xml
        .as_str()
        .contains("Cpt=\"العجز الصحي\" Prop=\"Value\" Val=\"ثبوت العجز\" Equal=\"Yes\""));
}

#[test]
fn deleting_only_finding_is_rejected() {
    let (_, err) = apply(json!([{
        "target": "rules", "kind": "delete",
        "path": {"model": MODEL, "rule": "R1", "finding": 0}
    }]))
    .unwrap_err();
    assert_eq!(err.code(), "EmptyRule");
}

#[test]
fn renamed_rule_is_explained_under_new_name() {
    let (o, rb) = apply(json!([{
        "target": "rules", "kind": "rename",
        "path": {"model": MODEL, "rule": "R1"}, "name": "R9"
    }]))
    .unwrap();
    let kb = Arc::new(KbSnapshot::new(o, rb, 2).unwrap());
    let mut s = SessionState::new(kb, MODEL).unwrap();
    s.assert_finding(R1_CONCEPT, "Value", R1_VALUE).unwrap();
    let trace = s.explain("R9").unwrap();
    assert_eq!(trace.consequent, R1_CONSEQUENT);
    assert_eq!(s.explain("R1").unwrap_err().code(), "UnknownRule");
    assert_eq!(s.evaluate().sure_names(), vec!["R9"]);
}

#[test]
fn batch_stops_at_first_rejection() {
    let (i, err) = apply(json!([
        {"target": "rules", "kind": "set-consequent", "path": {"model": MODEL, "rule": "R2"}, "consequent": "x"},
        {"target": "rules", "kind": "rename", "path": {"model": MODEL, "rule": "R2"}, "name": "R1"},
    ]))
    .unwrap_err();
    assert_eq!((i, err.code()), (1, "DuplicateName"));

    let (_, err) = apply(json!([
        {"target": "rules", "kind": "add-finding", "path": {"model": MODEL, "rule": "R1"},
         "finding": {"concept": "الاستقالة", "value": "y", "polarity": "must-differ"}}
    ]))
    .unwrap_err();
    assert_eq!(err.code(), "DuplicateSlot");

    let (_, err) = apply(json!([
        {"target": "ontology", "kind": "rename", "path": {"regulation": "غير موجود"}, "name": "x"}
    ]))
    .unwrap_err();
    assert_eq!(err.code(), "PathNotFound");
}

fn write_kb(dir: &std::path::Path, ontology: &str, rules: &str) {
    std::fs::write(dir.join(ONTOLOGY_FILE), ontology).unwrap();
    std::fs::write(dir.join(RULES_FILE), rules).unwrap();
}

#[test]
fn kb_directory_load_save_and_lint() {
    let tmp = tempfile::tempdir().unwrap();
    write_kb(tmp.path(), ONTOLOGY_DOC, RULES_DOC);
    let policy = NormalizationPolicy::default();

    let outcome = lint_kb(tmp.path(), &policy).unwrap();
    assert_eq!(outcome.report.as_ref().unwrap().violations.len(), 2);
    assert_eq!(outcome.exit_code(), 1);

    let kb = KbDir::open(tmp.path()).unwrap();
    let loaded = kb.load(&policy).unwrap();
    let lock = kb.lock().unwrap();
    kb.save(&lock, Some(&augmented_ontology()), Some(&loaded.rulebase))
        .unwrap();
    drop(lock);
    assert!(tmp.path().join(LOCK_FILE).exists());

    let outcome = lint_kb(tmp.path(), &policy).unwrap();
    assert_eq!(outcome.exit_code(), 0, "{}", outcome.render_text());
    let rules = std::fs::read_to_string(tmp.path().join(RULES_FILE)).unwrap();
    assert_eq!(rules, serialize_rulebase(&fixture_rules()).as_str());

    // no temporary files left behind
    let stray: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".tmp"))
        .collect();
    assert!(stray.is_empty(), "{stray:?}");
}

#[test]
fn kb_directory_errors() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join(ONTOLOGY_FILE), ONTOLOGY_DOC).unwrap();
    let policy = NormalizationPolicy::default();
    assert!(matches!(
        lint_kb(tmp.path(), &policy),
        Err(rcses_core::KbDirError::MissingFile(_))
    ));
    std::fs::write(tmp.path().join(RULES_FILE), "<KSA_Civil_Regulation><Model>").unwrap();
    let outcome = lint_kb(tmp.path(), &policy).unwrap();
    assert!(outcome.report.is_none());
    assert_eq!(outcome.exit_code(), 1);
    assert!(!outcome.rules_issues.is_empty());
    assert!(KbDir::open(tmp.path()).unwrap().load(&policy).is_err());
}
