//! HTTP filtering server.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use idpf_service::{serve, ServiceConfig};
use idpfilter::MatchStrategy;

#[derive(Parser)]
#[command(name = "idpf-server", version, about = "Serve the filtering API over HTTP")]
struct Cli {
    #[arg(long, env = "IDPF_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
    /// SQLite file; state is kept in memory only when omitted
    #[arg(long, env = "IDPF_DB")]
    db: Option<PathBuf>,
    #[arg(long, env = "IDPF_PBKDF2_ITERATIONS", default_value_t = 210_000)]
    pbkdf2_iterations: u32,
    /// Matcher for newly registered apps: regex, kmp or trie
    #[arg(long, env = "IDPF_STRATEGY", default_value = "trie")]
    strategy: MatchStrategy,
    /// Largest accepted text, in bytes
    #[arg(long, env = "IDPF_MAX_TEXT_BYTES", default_value_t = 1 << 20)]
    max_text_bytes: usize,
    #[arg(long, env = "IDPF_SESSION_TTL_SECS", default_value_t = 86_400)]
    session_ttl_secs: u64,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let cli = Cli::parse();
    if cli.pbkdf2_iterations == 0 {
        eprintln!("error: --pbkdf2-iterations must be positive");
        return ExitCode::FAILURE;
    }
    if cli.db.is_none() {
        tracing::warn!("no --db given; accounts and lists will not survive a restart");
    }
    let config = ServiceConfig {
        bind: cli.bind,
        db_path: cli.db,
        pbkdf2_iterations: cli.pbkdf2_iterations,
        default_strategy: cli.strategy,
        max_text_bytes: cli.max_text_bytes,
        session_ttl: Duration::from_secs(cli.session_ttl_secs),
    };
    match serve(config).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
