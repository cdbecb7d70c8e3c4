use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use rcses_server::{
    router, AppState, ServiceConfig, SystemClock, ADMIN_TOKEN_ENV, DEFAULT_CAPACITY,
    DEFAULT_TTL_SECS,
};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(
    name = "rcses-server",
    version,
    about = "Consultation service over a knowledge base directory"
)]
struct Args {
    /// Directory containing ontology.xml and rules.xml.
    #[arg(long, value_name = "DIR")]
    kb: PathBuf,
    #[arg(long, value_name = "ADDR", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Idle seconds after which a session is dropped.
    #[arg(long, value_name = "SECS", default_value_t = DEFAULT_TTL_SECS)]
    session_ttl: u64,
    #[arg(long, value_name = "N", default_value_t = DEFAULT_CAPACITY)]
    session_capacity: usize,
    /// Reject requests on sessions started before the last KB replacement.
    #[arg(long)]
    strict_kb: bool,
    /// Built client assets to serve under /ui/.
    #[arg(long, value_name = "DIR")]
    ui_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();

    let config = ServiceConfig {
        kb_dir: args.kb,
        session_ttl: args.session_ttl,
        session_capacity: args.session_capacity,
        strict_kb: args.strict_kb,
        admin_token: std::env::var(ADMIN_TOKEN_ENV).ok(),
        ui_dir: args.ui_dir,
    };
    let state = match AppState::from_config(&config, Arc::new(SystemClock)) {
        Ok(state) => state,
        Err(err) => {
            eprintln!("rcses-server: cannot load knowledge base: {err}");
            if let rcses_core::KbDirError::Parse { issues, .. } = &err {
                for issue in issues {
                    eprintln!("  {issue}");
                }
            }
            return ExitCode::from(2);
        }
    };
    if state.admin_token.is_none() {
        tracing::warn!("{ADMIN_TOKEN_ENV} is not set; knowledge base uploads are disabled");
    }
    let kb = state.kb.current();
    tracing::info!(
        version = kb.version(),
        fingerprint = kb.fingerprint(),
        models = kb.rulebase().models.len(),
        "knowledge base loaded"
    );

    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(l) => l,
        Err(err) => {
            eprintln!("rcses-server: cannot listen on {}: {err}", args.listen);
            return ExitCode::from(2);
        }
    };
    tracing::info!(addr = %args.listen, "listening");
    let app = router(Arc::new(state));
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(err) = axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
    {
        eprintln!("rcses-server: {err}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
