//! A knowledge base on disk: `ontology.xml` and `rules.xml` in one directory.
//!
//! Writers take an exclusive advisory lock on `.rcses.lock` in the directory
//! and replace files by writing a temporary sibling and renaming it over the
//! target, so readers never see a half-written document.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::issue::{has_errors, ParseIssue};
use crate::lexicon::{check_rulebase, LintReport, NormalizationPolicy};
use crate::model::{Ontology, RuleBase};
use crate::xml::{
    parse_ontology_with, parse_rulebase_with, serialize_ontology, serialize_rulebase,
};

pub const ONTOLOGY_FILE: &str = "ontology.xml";
pub const RULES_FILE: &str = "rules.xml";
pub const LOCK_FILE: &str = ".rcses.lock";

#[derive(Debug, Error)]
pub enum KbDirError {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{} does not parse ({} issue(s))", path.display(), issues.len())]
    Parse {
        path: PathBuf,
        issues: Vec<ParseIssue>,
    },
}

impl KbDirError {
    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            KbDirError::MissingFile(path.to_owned())
        } else {
            KbDirError::Io {
                path: path.to_owned(),
                source,
            }
        }
    }
}

/// Held while writing; dropping it releases the lock.
#[derive(Debug)]
pub struct DirLock {
    _file: File,
}

/// Both documents of a directory, parsed.
#[derive(Debug, Clone)]
pub struct LoadedKb {
    pub ontology: Ontology,
    pub rulebase: RuleBase,
    /// Warnings raised while parsing.
    pub warnings: Vec<ParseIssue>,
}

#[derive(Debug, Clone)]
pub struct KbDir {
    root: PathBuf,
}

impl KbDir {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, KbDirError> {
        let root = root.into();
        let meta = fs::metadata(&root).map_err(|e| KbDirError::io(&root, e))?;
        if !meta.is_dir() {
            return Err(KbDirError::MissingFile(root));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ontology_path(&self) -> PathBuf {
        self.root.join(ONTOLOGY_FILE)
    }

    pub fn rules_path(&self) -> PathBuf {
        self.root.join(RULES_FILE)
    }

    fn read(path: &Path) -> Result<Vec<u8>, KbDirError> {
        fs::read(path).map_err(|e| KbDirError::io(path, e))
    }

    pub fn read_ontology_bytes(&self) -> Result<Vec<u8>, KbDirError> {
        Self::read(&self.ontology_path())
    }

    pub fn read_rules_bytes(&self) -> Result<Vec<u8>, KbDirError> {
        Self::read(&self.rules_path())
    }

    /// Reads and parses both documents; any error-severity issue fails the load.
    pub fn load(&self, policy: &NormalizationPolicy) -> Result<LoadedKb, KbDirError> {
        let onto_bytes = self.read_ontology_bytes()?;
        let rules_bytes = self.read_rules_bytes()?;
        let onto = parse_ontology_with(&onto_bytes, policy);
        let ontology = onto.value.ok_or_else(|| KbDirError::Parse {
            path: self.ontology_path(),
            issues: onto.issues.clone(),
        })?;
        let rules = parse_rulebase_with(&rules_bytes, policy);
        let rulebase = rules.value.ok_or_else(|| KbDirError::Parse {
            path: self.rules_path(),
            issues: rules.issues.clone(),
        })?;
        let mut warnings = onto.issues;
        warnings.extend(rules.issues);
        Ok(LoadedKb {
            ontology,
            rulebase,
            warnings,
        })
    }

    /// Blocks until the exclusive directory lock is acquired.
    pub fn lock(&self) -> Result<DirLock, KbDirError> {
        let path = self.root.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| KbDirError::io(&path, e))?;
        file.lock().map_err(|e| KbDirError::io(&path, e))?;
        Ok(DirLock { _file: file })
    }

    /// Replaces `name` in the directory with `bytes` via temp file and rename.
    pub fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), KbDirError> {
        let target = self.root.join(name);
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .suffix(".tmp")
            .tempfile_in(&self.root)
            .map_err(|e| KbDirError::io(&self.root, e))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| KbDirError::io(tmp.path(), e))?;
        tmp.persist(&target)
            .map_err(|e| KbDirError::io(&target, e.error))?;
        Ok(())
    }

    /// Canonically rewrites the given documents. Callers hold the lock.
    pub fn save(
        &self,
        _lock: &DirLock,
        ontology: Option<&Ontology>,
        rulebase: Option<&RuleBase>,
    ) -> Result<(), KbDirError> {
        if let Some(o) = ontology {
            self.write_atomic(ONTOLOGY_FILE, &serialize_ontology(o).bytes)?;
        }
        if let Some(r) = rulebase {
            self.write_atomic(RULES_FILE, &serialize_rulebase(r).bytes)?;
        }
        Ok(())
    }
}

/// Parse issues of both documents plus, when both parsed, the lint report.
#[derive(Debug, Clone, Serialize)]
pub struct LintOutcome {
    pub ontology_issues: Vec<ParseIssue>,
    pub rules_issues: Vec<ParseIssue>,
    pub report: Option<LintReport>,
}

impl LintOutcome {
    pub fn has_errors(&self) -> bool {
        has_errors(&self.ontology_issues)
            || has_errors(&self.rules_issues)
            || self.report.as_ref().is_none_or(LintReport::has_errors)
    }

    /// 0 when clean, 1 when any error-severity entry exists.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.has_errors())
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (file, issues) in [
            (ONTOLOGY_FILE, &self.ontology_issues),
            (RULES_FILE, &self.rules_issues),
        ] {
            for issue in issues {
                out.push_str(&format!("{file}: {issue}\n"));
            }
        }
        match &self.report {
            Some(report) if report.is_empty() => {
                out.push_str("rules resolve against the ontology\n")
            }
            Some(report) => out.push_str(&report.render_text()),
            None => out.push_str("lint skipped: documents do not parse\n"),
        }
        out
    }
}

/// Parses and cross-checks the knowledge base in `dir`.
///
/// Missing files are errors; parse problems are reported in the outcome.
pub fn lint_kb(dir: &Path, policy: &NormalizationPolicy) -> Result<LintOutcome, KbDirError> {
    let kb = KbDir::open(dir)?;
    let onto_bytes = kb.read_ontology_bytes()?;
    let rules_bytes = kb.read_rules_bytes()?;
    let onto = parse_ontology_with(&onto_bytes, policy);
    let rules = parse_rulebase_with(&rules_bytes, policy);
    let report = match (&onto.value, &rules.value) {
        (Some(o), Some(r)) => Some(check_rulebase(r, o, policy)),
        _ => None,
    };
    Ok(LintOutcome {
        ontology_issues: onto.issues,
        rules_issues: rules.issues,
        report,
    })
}
