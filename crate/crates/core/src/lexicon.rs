//! Orthographic normalization and rulebase-to-ontology cross-reference checks.
//!
//! Every name in a knowledge base is compared through [`normalize_text`], so
//! Arabic spelling variants (hamza forms on alef, harakat, tatweel) do not
//! break matching. [`check_rulebase`] verifies that every token a rule uses is
//! declared in the ontology and [`suggest_corrections`] proposes near matches.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::model::{Ontology, Polarity, RuleBase};

const TATWEEL: char = '\u{0640}';
const BARE_ALEF: char = '\u{0627}';
const ALEF_MAQSURA: char = '\u{0649}';
const YA: char = '\u{064A}';

/// Upper bound on pipeline passes. Real inputs reach the fixed point after one.
const MAX_PASSES: usize = 16;

/// Switches for the normalization pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationPolicy {
    pub collapse_whitespace: bool,
    /// Removes Arabic harakat and related combining marks.
    pub strip_diacritics: bool,
    pub strip_tatweel: bool,
    /// Maps alef with hamza above, hamza below and madda to bare alef.
    pub unify_alef: bool,
    /// Maps alef maqsura to ya.
    pub unify_ya: bool,
    /// Lowercases Latin letters; other scripts are untouched.
    pub case_fold: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            collapse_whitespace: true,
            strip_diacritics: true,
            strip_tatweel: true,
            unify_alef: true,
            unify_ya: false,
            case_fold: true,
        }
    }
}

impl NormalizationPolicy {
    /// Only canonical composition, every optional step disabled.
    pub fn verbatim() -> Self {
        Self {
            collapse_whitespace: false,
            strip_diacritics: false,
            strip_tatweel: false,
            unify_alef: false,
            unify_ya: false,
            case_fold: false,
        }
    }
}

fn is_arabic_mark(c: char) -> bool {
    matches!(c,
        '\u{0610}'..='\u{061A}'
        | '\u{064B}'..='\u{065F}'
        | '\u{0670}'
        | '\u{06D6}'..='\u{06DC}'
        | '\u{06DF}'..='\u{06E4}'
        | '\u{06E7}'..='\u{06E8}'
        | '\u{06EA}'..='\u{06ED}')
}

fn is_latin(c: char) -> bool {
    matches!(c,
        'A'..='Z' | 'a'..='z'
        | '\u{00C0}'..='\u{024F}'
        | '\u{1E00}'..='\u{1EFF}')
}

fn fold_latin(c: char) -> char {
    if !is_latin(c) {
        return c;
    }
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn single_pass(raw: &str, policy: &NormalizationPolicy) -> String {
    let composed = raw.nfc();
    let mut out = String::with_capacity(raw.len());
    // Leading whitespace is dropped by starting in the "just saw a space" state.
    let mut pending_space = false;
    let mut at_start = true;
    for c in composed {
        let c = if policy.case_fold { fold_latin(c) } else { c };
        if policy.strip_tatweel && c == TATWEEL {
            continue;
        }
        if policy.strip_diacritics && is_arabic_mark(c) {
            continue;
        }
        let c = match c {
            '\u{0622}' | '\u{0623}' | '\u{0625}' if policy.unify_alef => BARE_ALEF,
            ALEF_MAQSURA if policy.unify_ya => YA,
            other => other,
        };
        if policy.collapse_whitespace && c.is_whitespace() {
            pending_space = !at_start;
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        at_start = false;
        out.push(c);
    }
    out
}

/// Normalizes `raw` under `policy`.
///
/// Steps run in a fixed order: canonical composition (NFC), Latin case fold,
/// tatweel removal, diacritic removal, alef/ya unification, whitespace trim and
/// collapse. The pipeline is repeated until its output is stable, so the result
/// is idempotent for every policy.
pub fn normalize_text(raw: &str, policy: &NormalizationPolicy) -> String {
    let mut current = single_pass(raw, policy);
    for _ in 1..MAX_PASSES {
        let next = single_pass(&current, policy);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Severity of a lint entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// What a lint entry complains about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LintCode {
    UnknownConcept,
    UnknownValue,
    UnknownProperty,
    AmbiguousConcept,
}

impl LintCode {
    pub fn as_str(self) -> &'static str {
        match self {
            LintCode::UnknownConcept => "UnknownConcept",
            LintCode::UnknownValue => "UnknownValue",
            LintCode::UnknownProperty => "UnknownProperty",
            LintCode::AmbiguousConcept => "AmbiguousConcept",
        }
    }
}

impl fmt::Display for LintCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleLocator {
    pub model: String,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingLocator {
    /// Zero-based position of the finding within its rule.
    pub index: usize,
    pub concept: String,
    pub property: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintViolation {
    pub rule: RuleLocator,
    pub finding: FindingLocator,
    pub code: LintCode,
    pub severity: Severity,
    pub token: String,
    pub suggestions: Vec<String>,
}

/// Result of cross-checking a rulebase against an ontology.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub violations: Vec<LintViolation>,
    pub counts: BTreeMap<LintCode, usize>,
}

impl LintReport {
    fn push(&mut self, violation: LintViolation) {
        *self.counts.entry(violation.code).or_default() += 1;
        self.violations.push(violation);
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, code: LintCode) -> usize {
        self.counts.get(&code).copied().unwrap_or(0)
    }

    pub fn error_count(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
            .count()
    }

    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }

    /// One line per violation, then a summary line per code.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let severity = match v.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            out.push_str(&format!(
                "{severity}: {code} model={model:?} rule={rule} finding[{idx}] token={token:?}",
                code = v.code,
                model = v.rule.model,
                rule = v.rule.rule,
                idx = v.finding.index,
                token = v.token,
            ));
            if !v.suggestions.is_empty() {
                out.push_str(&format!(" did-you-mean={:?}", v.suggestions));
            }
            out.push('\n');
        }
        for (code, n) in &self.counts {
            out.push_str(&format!("{code}: {n}\n"));
        }
        out
    }
}

/// A concept occurrence with its names re-normalized under one policy.
struct ConceptEntry<'a> {
    key: String,
    property_key: String,
    value_keys: Vec<String>,
    concept: &'a crate::model::Concept,
}

fn concept_entries<'a>(
    ontology: &'a Ontology,
    policy: &NormalizationPolicy,
) -> Vec<ConceptEntry<'a>> {
    ontology
        .concepts()
        .map(|(_, _, concept)| ConceptEntry {
            key: normalize_text(concept.name.text(), policy),
            property_key: normalize_text(concept.property.text(), policy),
            value_keys: concept
                .values
                .iter()
                .map(|v| normalize_text(v.text(), policy))
                .collect(),
            concept,
        })
        .collect()
}

const SUGGESTIONS_PER_VIOLATION: usize = 3;

/// Cross-checks every finding of `rulebase` against `ontology`.
///
/// All comparisons are made on names re-normalized under `policy`, so the
/// report depends on the policy passed here and not on the one the documents
/// were loaded with.
pub fn check_rulebase(
    rulebase: &RuleBase,
    ontology: &Ontology,
    policy: &NormalizationPolicy,
) -> LintReport {
    let entries = concept_entries(ontology, policy);
    let mut report = LintReport::default();

    for model in &rulebase.models {
        for rule in &model.rules {
            for (index, finding) in rule.findings.iter().enumerate() {
                let locate = || {
                    (
                        RuleLocator {
                            model: model.name.text().to_owned(),
                            rule: rule.name.text().to_owned(),
                        },
                        FindingLocator {
                            index,
                            concept: finding.concept.text().to_owned(),
                            property: finding.property.text().to_owned(),
                            value: finding.value.text().to_owned(),
                        },
                    )
                };
                let concept_key = normalize_text(finding.concept.text(), policy);
                let hits: Vec<&ConceptEntry> =
                    entries.iter().filter(|e| e.key == concept_key).collect();

                if hits.is_empty() {
                    let (rule_loc, finding_loc) = locate();
                    let suggestions = rank_candidates(
                        finding.concept.text(),
                        entries.iter().map(|e| e.concept.name.text()),
                        policy,
                        SUGGESTIONS_PER_VIOLATION,
                    )
                    .into_iter()
                    .map(|s| s.name)
                    .collect();
                    report.push(LintViolation {
                        rule: rule_loc,
                        finding: finding_loc,
                        code: LintCode::UnknownConcept,
                        severity: Severity::Error,
                        token: finding.concept.text().to_owned(),
                        suggestions,
                    });
                    continue;
                }

                if hits.len() > 1 {
                    let (rule_loc, finding_loc) = locate();
                    report.push(LintViolation {
                        rule: rule_loc,
                        finding: finding_loc,
                        code: LintCode::AmbiguousConcept,
                        severity: Severity::Warning,
                        token: finding.concept.text().to_owned(),
                        suggestions: Vec::new(),
                    });
                }

                let property_key = normalize_text(finding.property.text(), policy);
                if !hits.iter().any(|e| e.property_key == property_key) {
                    let (rule_loc, finding_loc) = locate();
                    let mut seen = HashSet::new();
                    let suggestions = hits
                        .iter()
                        .filter(|e| seen.insert(e.property_key.clone()))
                        .map(|e| e.concept.property.text().to_owned())
                        .collect();
                    report.push(LintViolation {
                        rule: rule_loc,
                        finding: finding_loc,
                        code: LintCode::UnknownProperty,
                        severity: Severity::Error,
                        token: finding.property.text().to_owned(),
                        suggestions,
                    });
                }

                let value_key = normalize_text(finding.value.text(), policy);
                let in_domain = hits.iter().any(|e| e.value_keys.contains(&value_key));
                if !in_domain {
                    let (rule_loc, finding_loc) = locate();
                    let severity = match finding.polarity {
                        Polarity::MustEqual => Severity::Error,
                        Polarity::MustDiffer => Severity::Warning,
                    };
                    let suggestions = rank_candidates(
                        finding.value.text(),
                        hits.iter()
                            .flat_map(|e| e.concept.values.iter().map(|v| v.text())),
                        policy,
                        SUGGESTIONS_PER_VIOLATION,
                    )
                    .into_iter()
                    .map(|s| s.name)
                    .collect();
                    report.push(LintViolation {
                        rule: rule_loc,
                        finding: finding_loc,
                        code: LintCode::UnknownValue,
                        severity,
                        token: finding.value.text().to_owned(),
                        suggestions,
                    });
                }
            }
        }
    }
    report
}

/// A ranked correction candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    /// The candidate as written in the ontology.
    pub name: String,
    /// Levenshtein distance between normalized forms, in characters.
    pub distance: usize,
}

/// Largest edit distance still offered as a suggestion for a token of
/// `len` characters: `max(2, ceil(len / 4))`.
pub fn suggestion_threshold(len: usize) -> usize {
    len.div_ceil(4).max(2)
}

fn rank_candidates<'a>(
    token: &str,
    candidates: impl Iterator<Item = &'a str>,
    policy: &NormalizationPolicy,
    k: usize,
) -> Vec<Suggestion> {
    let token_key = normalize_text(token, policy);
    let limit = suggestion_threshold(token_key.chars().count());
    let mut seen = HashSet::new();
    let mut ranked: Vec<Suggestion> = candidates
        .filter_map(|name| {
            let key = normalize_text(name, policy);
            if !seen.insert(key.clone()) {
                return None;
            }
            let distance = strsim::levenshtein(&token_key, &key);
            (distance <= limit).then(|| Suggestion {
                name: name.to_owned(),
                distance,
            })
        })
        .collect();
    // Stable sort keeps document order among equal distances.
    ranked.sort_by_key(|s| s.distance);
    ranked.truncate(k);
    ranked
}

/// Up to `k` ontology concept or value names closest to `token`.
///
/// Candidates are visited in document order (each concept, then its values),
/// deduplicated on their normalized form, filtered by
/// [`suggestion_threshold`] and ordered by ascending distance.
pub fn suggest_corrections(
    token: &str,
    ontology: &Ontology,
    policy: &NormalizationPolicy,
    k: usize,
) -> Vec<Suggestion> {
    let names = ontology.concepts().flat_map(|(_, _, concept)| {
        std::iter::once(concept.name.text()).chain(concept.values.iter().map(|v| v.text()))
    });
    rank_candidates(token, names, policy, k.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_alef() -> NormalizationPolicy {
        NormalizationPolicy {
            unify_alef: false,
            ..NormalizationPolicy::default()
        }
    }

    #[test]
    fn trims_and_collapses_whitespace() {
        assert_eq!(normalize_text("  يوجد إعلان ", &no_alef()), "يوجد إعلان");
        assert_eq!(normalize_text("a \t\n b", &no_alef()), "a b");
        assert_eq!(normalize_text("   ", &no_alef()), "");
    }

    #[test]
    fn unifies_hamza_alef_forms() {
        let policy = NormalizationPolicy::default();
        assert_eq!(normalize_text("الإستقالة", &policy), "الاستقالة");
        assert_eq!(normalize_text("أآإا", &policy), "اااا");
        assert_eq!(normalize_text("الإستقالة", &no_alef()), "الإستقالة");
    }

    #[test]
    fn strips_harakat_and_tatweel() {
        let policy = NormalizationPolicy::default();
        // kitaab with fatha/sukun marks and a tatweel
        assert_eq!(normalize_text("كِتـــَابٌ", &policy), "كتاب");
        let keep = NormalizationPolicy {
            strip_diacritics: false,
            strip_tatweel: false,
            ..policy
        };
        assert_eq!(normalize_text("كِتـَاب", &keep), "كِتـَاب");
    }

    #[test]
    fn ya_unification_is_opt_in() {
        let on = NormalizationPolicy {
            unify_ya: true,
            ..NormalizationPolicy::default()
        };
        assert_eq!(
            normalize_text("حتى", &NormalizationPolicy::default()),
            "حتى"
        );
        assert_eq!(normalize_text("حتى", &on), "حتي");
    }

    #[test]
    fn case_fold_touches_latin_only() {
        let policy = NormalizationPolicy::default();
        assert_eq!(normalize_text("Value ÉTÉ", &policy), "value été");
        // Greek and Cyrillic are outside the fold.
        assert_eq!(normalize_text("ΣД", &policy), "ΣД");
    }

    #[test]
    fn decomposed_input_is_composed_first() {
        // alef + combining hamza above composes to U+0623 before unification
        let decomposed = "\u{0627}\u{0654}";
        assert_eq!(normalize_text(decomposed, &no_alef()), "\u{0623}");
        assert_eq!(
            normalize_text(decomposed, &NormalizationPolicy::default()),
            "\u{0627}"
        );
    }

    #[test]
    fn blocked_hamza_reaches_fixed_point() {
        let policy = NormalizationPolicy {
            strip_diacritics: false,
            unify_alef: false,
            ..NormalizationPolicy::default()
        };
        let once = normalize_text("\u{0627}\u{0640}\u{0654}", &policy);
        assert_eq!(once, normalize_text(&once, &policy));
        assert_eq!(once, "\u{0623}");
    }

    #[test]
    fn threshold_formula() {
        assert_eq!(suggestion_threshold(0), 2);
        assert_eq!(suggestion_threshold(8), 2);
        assert_eq!(suggestion_threshold(9), 3);
        assert_eq!(suggestion_threshold(16), 4);
    }
}
