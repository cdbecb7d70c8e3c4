//! Random small knowledge bases and a direct, table-driven rule classifier
//! used as the reference for the engine.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

pub const MODEL_NAME: &str = "m";
pub const PROPERTY: &str = "Value";

#[derive(Debug, Clone)]
pub struct GenFinding {
    pub concept: usize,
    pub value: usize,
    pub equal: bool,
}

#[derive(Debug, Clone)]
pub struct RandomKb {
    /// Value count per concept.
    pub domains: Vec<usize>,
    pub rules: Vec<Vec<GenFinding>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Sure,
    Expected,
    Excluded,
}

pub fn concept_name(c: usize) -> String {
    format!("c{c}")
}

pub fn value_name(c: usize, v: usize) -> String {
    format!("c{c}v{v}")
}

pub fn rule_name(r: usize) -> String {
    format!("R{}", r + 1)
}

impl RandomKb {
    pub fn generate(
        rng: &mut impl Rng,
        max_concepts: usize,
        max_rules: usize,
        max_findings: usize,
        max_values: usize,
    ) -> Self {
        let n_concepts = rng.random_range(1..=max_concepts);
        let domains: Vec<usize> = (0..n_concepts)
            .map(|_| rng.random_range(1..=max_values))
            .collect();
        let n_rules = rng.random_range(1..=max_rules);
        let rules = (0..n_rules)
            .map(|_| {
                let arity = rng.random_range(1..=max_findings.min(n_concepts));
                let mut concepts: Vec<usize> = (0..n_concepts).collect();
                concepts.shuffle(rng);
                concepts
                    .into_iter()
                    .take(arity)
                    .map(|c| GenFinding {
                        concept: c,
                        value: rng.random_range(0..domains[c]),
                        equal: rng.random_bool(0.7),
                    })
                    .collect()
            })
            .collect();
        Self { domains, rules }
    }

    pub fn ontology_xml(&self) -> String {
        let mut s = String::from(
            "<KSA_Civil_Ontology><OntParent ParentName=\"reg\"><OntChild ChildName=\"ctx\">",
        );
        for (c, &n) in self.domains.iter().enumerate() {
            s.push_str(&format!("<OntConcept ConceptName=\"{}\">", concept_name(c)));
            for v in 0..n {
                s.push_str(&format!("<OntVal ValueName=\"{}\"/>", value_name(c, v)));
            }
            s.push_str("</OntConcept>");
        }
        s.push_str("</OntChild></OntParent></KSA_Civil_Ontology>");
        s
    }

    pub fn rules_xml(&self) -> String {
        let mut s = format!("<KSA_Civil_Regulation><Model ModelName=\"{MODEL_NAME}\">");
        for (r, findings) in self.rules.iter().enumerate() {
            s.push_str(&format!(
                "<Rule Name=\"{}\" RegItem=\"then {}\">",
                rule_name(r),
                r + 1
            ));
            for f in findings {
                s.push_str(&format!(
                    "<Finding Cpt=\"{}\" Prop=\"{PROPERTY}\" Val=\"{}\" Equal=\"{}\"/>",
                    concept_name(f.concept),
                    value_name(f.concept, f.value),
                    if f.equal { "Yes" } else { "No" }
                ));
            }
            s.push_str("</Rule>");
        }
        s.push_str("</Model></KSA_Civil_Regulation>");
        s
    }

    /// Classifies every rule given one optional answer per concept.
    pub fn classify(&self, wm: &[Option<usize>]) -> Vec<Oracle> {
        self.rules
            .iter()
            .map(|findings| {
                let holds = |f: &GenFinding| wm[f.concept].map(|v| (v == f.value) == f.equal);
                if findings.iter().all(|f| holds(f) == Some(true)) {
                    Oracle::Sure
                } else if findings.iter().any(|f| holds(f) == Some(false)) {
                    Oracle::Excluded
                } else {
                    Oracle::Expected
                }
            })
            .collect()
    }

    /// Every assignment of "unanswered or one domain value" to each concept.
    pub fn all_memories(&self) -> Vec<Vec<Option<usize>>> {
        let mut out = vec![Vec::new()];
        for &n in &self.domains {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Option<usize>>| {
                    std::iter::once(None)
                        .chain((0..n).map(Some))
                        .map(move |choice| {
                            let mut next = prefix.clone();
                            next.push(choice);
                            next
                        })
                })
                .collect();
        }
        out
    }

    /// Reference ranking of unanswered concepts: (concept, score), by score
    /// descending, ties by first mention in the model.
    pub fn questions(&self, wm: &[Option<usize>]) -> Vec<(usize, usize)> {
        let status = self.classify(wm);
        let mut first_seen = Vec::new();
        for findings in &self.rules {
            for f in findings {
                if !first_seen.contains(&f.concept) {
                    first_seen.push(f.concept);
                }
            }
        }
        let mut scored: Vec<(usize, usize, usize)> = first_seen
            .iter()
            .enumerate()
            .filter_map(|(order, &c)| {
                let score = self
                    .rules
                    .iter()
                    .zip(&status)
                    .filter(|(findings, s)| {
                        **s == Oracle::Expected
                            && findings.iter().any(|f| f.concept == c && wm[c].is_none())
                    })
                    .count();
                (score > 0).then_some((score, order, c))
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().map(|(s, _, c)| (c, s)).collect()
    }
}
