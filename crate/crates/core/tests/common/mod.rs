#![allow(dead_code)]

pub mod random_kb;

use std::sync::Arc;

use rcses_core::{parse_ontology, parse_rulebase, KbSnapshot, Ontology, RuleBase};

pub const ONTOLOGY_DOC: &str = include_str!("../fixtures/ontology.xml");
pub const RULES_DOC: &str = include_str!("../fixtures/rules.xml");

pub const MODEL: &str = "إنهاء الخدمة";
pub const R1_CONCEPT: &str = "الإستقالة";
pub const R1_VALUE: &str = "تقديم الإستقالة وقبولها";
pub const R1_CONSEQUENT: &str = "إنهاء الخدمة بالإستقالة";
pub const R2_CONCEPT: &str = "طلب الإحالة على التقاعد قبل بلوغ السن النظامية";
pub const R2_VALUE: &str = "تقديم الطلب قبل بلوغ السن النظامية وقبوله";

pub fn fixture_ontology() -> Ontology {
    parse_ontology(ONTOLOGY_DOC.as_bytes()).expect("fixture ontology parses")
}

pub fn fixture_rules() -> RuleBase {
    parse_rulebase(RULES_DOC.as_bytes()).expect("fixture rules parse")
}

/// The fixture ontology plus a regulation holding the two concepts the fixture rules cite,
/// each with its cited value and one alternative.
pub fn augmented_ontology_xml() -> String {
    let extra = format!(
        r#"<OntParent ParentName="{MODEL}">
<OntChild ChildName="{R1_CONSEQUENT}">
<OntConcept ConceptName="{R1_CONCEPT}">
<OntVal ValueName="{R1_VALUE}"/>
<OntVal ValueName="لم يتم تقديم الإستقالة"/>
</OntConcept>
</OntChild>
<OntChild ChildName="إنهاء الخدمة بطلب الإحالة على التقاعد">
<OntConcept ConceptName="{R2_CONCEPT}">
<OntVal ValueName="{R2_VALUE}"/>
<OntVal ValueName="لم يقدم الطلب"/>
</OntConcept>
</OntChild>
</OntParent>
</KSA_Civil_Ontology>"#
    );
    ONTOLOGY_DOC.replace("</KSA_Civil_Ontology>", &extra)
}

pub fn augmented_ontology() -> Ontology {
    parse_ontology(augmented_ontology_xml().as_bytes()).expect("augmented ontology parses")
}

pub fn fixture_kb() -> Arc<KbSnapshot> {
    Arc::new(KbSnapshot::new(fixture_ontology(), fixture_rules(), 1).unwrap())
}

pub fn augmented_kb() -> Arc<KbSnapshot> {
    Arc::new(KbSnapshot::new(augmented_ontology(), fixture_rules(), 1).unwrap())
}
