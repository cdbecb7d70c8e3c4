use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::lexicon::Severity;

/// Machine-readable identifier of a load or validation problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    WellFormedness,
    UnknownElement,
    UnknownAttribute,
    UnexpectedText,
    AttributeMissing,
    EmptyName,
    DuplicateName,
    EmptyDomain,
    EmptyRule,
    DuplicateSlot,
    BadPolarity,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::WellFormedness => "WellFormedness",
            IssueCode::UnknownElement => "UnknownElement",
            IssueCode::UnknownAttribute => "UnknownAttribute",
            IssueCode::UnexpectedText => "UnexpectedText",
            IssueCode::AttributeMissing => "AttributeMissing",
            IssueCode::EmptyName => "EmptyName",
            IssueCode::DuplicateName => "DuplicateName",
            IssueCode::EmptyDomain => "EmptyDomain",
            IssueCode::EmptyRule => "EmptyRule",
            IssueCode::DuplicateSlot => "DuplicateSlot",
            IssueCode::BadPolarity => "BadPolarity",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A problem found while reading or validating a knowledge document.
///
/// `path` is an element path into the offending document, e.g.
/// `/KSA_Civil_Regulation/Model[1]/Rule[2]`, with 1-based indices counted
/// among same-named siblings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    pub severity: Severity,
    pub path: String,
    pub code: IssueCode,
    pub message: String,
}

impl ParseIssue {
    pub fn error(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            path: path.into(),
            code,
            message: message.into(),
        }
    }

    pub fn warning(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            path: path.into(),
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{severity}: {} at {}: {}",
            self.code, self.path, self.message
        )
    }
}

pub fn has_errors(issues: &[ParseIssue]) -> bool {
    issues.iter().any(ParseIssue::is_error)
}
