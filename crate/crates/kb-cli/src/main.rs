//! `rcses-kb`: author and check a knowledge base directory.
//!
//! The directory holds `ontology.xml` and `rules.xml`. Writers take the
//! directory lock and replace files atomically, so running this next to a live
//! server is safe.
//!
//! Exit status: 0 success, 1 lint violations / rejected edits / unparsable
//! documents, 2 usage or I/O problems.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rcses_core::kbdir::LoadedKb;
use rcses_core::{
    apply_edits, check_rulebase, lint_kb, serialize_ontology, serialize_rulebase, EditRecord,
    KbDir, KbDirError, NormalizationPolicy, Polarity,
};

#[derive(Debug, Parser)]
#[command(
    name = "rcses-kb",
    version,
    about = "Knowledge builder for rule-based consultation KBs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse both documents and check rule vocabulary against the ontology.
    Lint {
        dir: PathBuf,
        /// Print the outcome as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Apply a JSON array of edit records and save the result.
    Edit {
        dir: PathBuf,
        #[arg(long, value_name = "EDITS.json")]
        edit_file: PathBuf,
    },
    /// Rewrite both documents in canonical form.
    Fmt {
        dir: PathBuf,
        /// Only report whether the files are canonical; do not write.
        #[arg(long)]
        check: bool,
    },
    /// Print the models, or the rules of one model.
    Show {
        dir: PathBuf,
        #[arg(long, value_name = "NAME")]
        model: Option<String>,
    },
}

const OK: u8 = 0;
const VIOLATIONS: u8 = 1;
const USAGE_OR_IO: u8 = 2;

/// A failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: USAGE_OR_IO,
            message: message.into(),
        }
    }

    fn violation(message: impl Into<String>) -> Self {
        Self {
            code: VIOLATIONS,
            message: message.into(),
        }
    }
}

impl From<KbDirError> for Failure {
    fn from(err: KbDirError) -> Self {
        match err {
            KbDirError::Parse { path, issues } => {
                let mut message = format!("{} does not parse:", path.display());
                for issue in issues {
                    message.push_str(&format!("\n  {issue}"));
                }
                Failure::violation(message)
            }
            other => Failure::io(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let policy = NormalizationPolicy::default();
    let result = match cli.command {
        Command::Lint { dir, json } => lint(&dir, json, &policy),
        Command::Edit { dir, edit_file } => edit(&dir, &edit_file, &policy),
        Command::Fmt { dir, check } => fmt(&dir, check, &policy),
        Command::Show { dir, model } => show(&dir, model.as_deref(), &policy),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("rcses-kb: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn lint(dir: &Path, json: bool, policy: &NormalizationPolicy) -> Result<u8, Failure> {
    let outcome = lint_kb(dir, policy)?;
    if json {
        let text =
            serde_json::to_string_pretty(&outcome).map_err(|e| Failure::io(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", outcome.render_text());
    }
    Ok(if outcome.has_errors() { VIOLATIONS } else { OK })
}

fn edit(dir: &Path, edit_file: &Path, policy: &NormalizationPolicy) -> Result<u8, Failure> {
    let raw = std::fs::read(edit_file)
        .map_err(|e| Failure::io(format!("{}: {e}", edit_file.display())))?;
    let edits: Vec<EditRecord> = serde_json::from_slice(&raw).map_err(|e| {
        Failure::io(format!(
            "{}: not a valid edit file: {e}",
            edit_file.display()
        ))
    })?;

    let kb = KbDir::open(dir)?;
    let lock = kb.lock()?;
    let LoadedKb {
        ontology, rulebase, ..
    } = kb.load(policy)?;
    let (new_ontology, new_rulebase) =
        apply_edits(&ontology, &rulebase, &edits).map_err(|(i, err)| {
            Failure::violation(format!(
                "edit #{i} rejected ({}): {err}; nothing was written",
                err.code()
            ))
        })?;

    let ontology_changed = new_ontology != ontology;
    let rules_changed = new_rulebase != rulebase;
    kb.save(
        &lock,
        ontology_changed.then_some(&new_ontology),
        rules_changed.then_some(&new_rulebase),
    )?;
    drop(lock);

    println!("applied {} edit(s)", edits.len());
    let report = check_rulebase(&new_rulebase, &new_ontology, policy);
    if !report.is_empty() {
        println!(
            "note: the knowledge base has {} lint finding(s):",
            report.violations.len()
        );
        print!("{}", report.render_text());
    }
    Ok(OK)
}

fn fmt(dir: &Path, check: bool, policy: &NormalizationPolicy) -> Result<u8, Failure> {
    let kb = KbDir::open(dir)?;
    let lock = kb.lock()?;
    let loaded = kb.load(policy)?;
    let ontology = serialize_ontology(&loaded.ontology);
    let rules = serialize_rulebase(&loaded.rulebase);
    let ontology_stale = kb.read_ontology_bytes()? != ontology.bytes;
    let rules_stale = kb.read_rules_bytes()? != rules.bytes;

    for (stale, path) in [
        (ontology_stale, kb.ontology_path()),
        (rules_stale, kb.rules_path()),
    ] {
        if stale {
            let verb = if check {
                "would reformat"
            } else {
                "reformatted"
            };
            println!("{verb} {}", path.display());
        }
    }
    if check {
        return Ok(if ontology_stale || rules_stale {
            VIOLATIONS
        } else {
            OK
        });
    }
    kb.save(
        &lock,
        ontology_stale.then_some(&loaded.ontology),
        rules_stale.then_some(&loaded.rulebase),
    )?;
    Ok(OK)
}

fn show(dir: &Path, model: Option<&str>, policy: &NormalizationPolicy) -> Result<u8, Failure> {
    let loaded = KbDir::open(dir)?.load(policy)?;
    let Some(wanted) = model else {
        for m in &loaded.rulebase.models {
            println!("{} ({} rules)", m.name, m.rules.len());
        }
        let concepts = loaded.ontology.concepts().count();
        println!(
            "ontology: {} regulation(s), {concepts} concept(s)",
            loaded.ontology.regulations.len()
        );
        return Ok(OK);
    };
    let key = rcses_core::Name::with_policy(wanted, policy);
    let m = loaded
        .rulebase
        .model(key.key())
        .ok_or_else(|| Failure::violation(format!("no model named {wanted:?}")))?;
    println!("{}", m.name);
    for rule in &m.rules {
        println!("  {}: IF", rule.name);
        for (i, f) in rule.findings.iter().enumerate() {
            let op = match f.polarity {
                Polarity::MustEqual => "=",
                Polarity::MustDiffer => "≠",
            };
            let joiner = if i + 1 < rule.findings.len() {
                " AND"
            } else {
                ""
            };
            println!(
                "      {}.{} {op} {}{joiner}",
                f.concept, f.property, f.value
            );
        }
        println!("    THEN {}", rule.consequent);
    }
    Ok(OK)
}
