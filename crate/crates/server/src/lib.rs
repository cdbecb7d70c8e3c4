//! HTTP/JSON consultation service.
//!
//! Serves one knowledge base directory: lists models, runs consultation
//! sessions (answer a question, get sure/expected/excluded conclusions and the
//! next questions back), renders explanations as HTML, and lets an
//! administrator replace the ontology or rules document under optimistic
//! concurrency.
//!
//! Build an [`AppState`] and hand it to [`router`]; the binary wraps this with
//! argument parsing and a listener.

pub mod api;
pub mod error;
pub mod kb;
pub mod store;

use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, AppState, Consultation, ModelSummary, NEXT_QUESTIONS};
pub use error::{ApiError, ErrorBody};
pub use kb::{Document, KbState};
pub use store::{
    Clock, ManualClock, SessionStore, SystemClock, DEFAULT_CAPACITY, DEFAULT_TTL_SECS,
};

use rcses_core::{KbDir, KbDirError, NormalizationPolicy};

/// Environment variable holding the admin bearer token.
pub const ADMIN_TOKEN_ENV: &str = "RCSES_ADMIN_TOKEN";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub kb_dir: PathBuf,
    pub session_ttl: u64,
    pub session_capacity: usize,
    pub strict_kb: bool,
    pub admin_token: Option<String>,
    pub ui_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(kb_dir: impl Into<PathBuf>) -> Self {
        Self {
            kb_dir: kb_dir.into(),
            session_ttl: DEFAULT_TTL_SECS,
            session_capacity: DEFAULT_CAPACITY,
            strict_kb: false,
            admin_token: None,
            ui_dir: None,
        }
    }
}

impl AppState {
    /// Loads the knowledge base named by `config`.
    pub fn from_config(config: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, KbDirError> {
        let dir = KbDir::open(&config.kb_dir)?;
        Ok(Self {
            kb: KbState::load(dir, NormalizationPolicy::default())?,
            sessions: SessionStore::new(config.session_ttl, config.session_capacity, clock),
            strict_kb: config.strict_kb,
            admin_token: config.admin_token.clone().filter(|t| !t.is_empty()),
            ui_dir: config.ui_dir.clone(),
        })
    }
}
