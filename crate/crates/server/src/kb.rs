//! The served knowledge base: an atomically swappable snapshot plus the
//! directory it is persisted to.
//!
//! Readers load the current `Arc<KbSnapshot>` without locking and keep using
//! it for the whole request. Replacements are serialized by `writer`, written
//! to disk first and only then published, so a failed write changes nothing.

use std::sync::Arc;

use arc_swap::ArcSwap;
use rcses_core::kbdir::LoadedKb;
use rcses_core::{
    check_rulebase, parse_ontology_with, parse_rulebase_with, KbDir, KbDirError, KbSnapshot,
    LintReport, NormalizationPolicy, Ontology, RuleBase,
};
use tokio::sync::Mutex;

use crate::error::ApiError;
use axum::http::StatusCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Document {
    Ontology,
    Rules,
}

#[derive(Debug)]
pub struct KbState {
    current: ArcSwap<KbSnapshot>,
    writer: Mutex<()>,
    dir: Option<KbDir>,
    policy: NormalizationPolicy,
}

impl KbState {
    /// Loads the directory; both documents must parse and validate.
    pub fn load(dir: KbDir, policy: NormalizationPolicy) -> Result<Self, KbDirError> {
        let LoadedKb {
            ontology, rulebase, ..
        } = dir.load(&policy)?;
        let snapshot =
            KbSnapshot::with_policy(ontology, rulebase, 1, policy).map_err(|issues| {
                KbDirError::Parse {
                    path: dir.root().to_owned(),
                    issues,
                }
            })?;
        Ok(Self::with_snapshot(snapshot, Some(dir)))
    }

    /// Serves `snapshot`; without a directory, replacements are kept in memory only.
    pub fn with_snapshot(snapshot: KbSnapshot, dir: Option<KbDir>) -> Self {
        let policy = *snapshot.policy();
        Self {
            current: ArcSwap::from_pointee(snapshot),
            writer: Mutex::new(()),
            dir,
            policy,
        }
    }

    pub fn current(&self) -> Arc<KbSnapshot> {
        self.current.load_full()
    }

    pub fn lint(&self) -> LintReport {
        let kb = self.current();
        check_rulebase(kb.rulebase(), kb.ontology(), &self.policy)
    }

    /// Replaces one document.
    ///
    /// `if_match` is the fingerprint the client last saw; a mismatch is a
    /// conflict. The new pair must parse and must not have error-severity
    /// lint violations. Returns the new snapshot.
    pub async fn replace(
        &self,
        which: Document,
        body: &[u8],
        if_match: Option<&str>,
    ) -> Result<Arc<KbSnapshot>, ApiError> {
        let _guard = self.writer.lock().await;
        let base = self.current();
        if let Some(tag) = if_match {
            if tag != "*" && tag != base.fingerprint() {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "EtagMismatch",
                    format!(
                        "knowledge base changed; current ETag is {:?}",
                        base.fingerprint()
                    ),
                ));
            }
        }

        let (ontology, rulebase): (Ontology, RuleBase) = match which {
            Document::Ontology => {
                let parsed = parse_ontology_with(body, &self.policy).into_result();
                (
                    parsed.map_err(|i| ApiError::parse_issues(&i))?,
                    base.rulebase().clone(),
                )
            }
            Document::Rules => {
                let parsed = parse_rulebase_with(body, &self.policy).into_result();
                (
                    base.ontology().clone(),
                    parsed.map_err(|i| ApiError::parse_issues(&i))?,
                )
            }
        };

        let report = check_rulebase(&rulebase, &ontology, &self.policy);
        if report.has_errors() {
            let mut err = ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "LintError",
                format!("{} error-severity lint violation(s)", report.error_count()),
            );
            err.body.issues = serde_json::to_value(&report).ok();
            return Err(err);
        }

        let next = base
            .successor(ontology, rulebase)
            .map_err(|i| ApiError::parse_issues(&i))?;

        if let Some(dir) = self.dir.clone() {
            let (o, r) = (next.ontology().clone(), next.rulebase().clone());
            tokio::task::spawn_blocking(move || -> Result<(), KbDirError> {
                let lock = dir.lock()?;
                match which {
                    Document::Ontology => dir.save(&lock, Some(&o), None),
                    Document::Rules => dir.save(&lock, None, Some(&r)),
                }
            })
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::internal(e.to_string()))?;
        }

        let next = Arc::new(next);
        self.current.store(Arc::clone(&next));
        Ok(next)
    }
}
