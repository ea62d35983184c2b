mod args;
mod commands;
mod error;
mod output;
mod preset;

use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use args::{Cli, Command, Globals};
#[cfg(feature = "parallel")]
use error::CliError;
use error::Result;

fn init_logging() {
    let filter = EnvFilter::try_from_env("RANSOMGAME_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

#[cfg(feature = "parallel")]
fn configure_threads(g: &Globals) -> Result<()> {
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(g: &Globals) -> Result<()> {
    if g.threads.is_some_and(|n| n > 1) {
        tracing::warn!("built without the parallel feature; --threads is ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.globals;
    configure_threads(g)?;
    match &cli.command {
        Command::Solve(a) => commands::solve(g, a),
        Command::Optimize(a) => commands::optimize(g, a),
        Command::Simulate(a) => commands::simulate(g, a),
        Command::Sweep(a) => commands::sweep(g, a),
        Command::Protocol(a) => commands::protocol(g, a),
        Command::Serve(a) => commands::serve(g, a),
        Command::Divergence(a) => commands::divergence(g, a),
        Command::Presets { show } => commands::presets(show.as_deref()),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 on --help
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
