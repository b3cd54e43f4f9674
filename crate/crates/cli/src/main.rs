//! `fuzzforge` — batch CLI over the synthetic fire-imagery engine.
//!
//! Exit status: 0 on success, 1 on a domain error (bad data, infeasible
//! constraints, IO), 2 on usage errors. Logs go to stderr; data goes to
//! files or stdout.

mod commands;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();

    // Clap usage errors exit with status 2 on their own.
    let cli = commands::Cli::parse();
    if let Err(err) = commands::run(cli) {
        log::error!("{err:#}");
        std::process::exit(1);
    }
}
