//! Command-line front end: argument parsing, dispatch and emission.

pub mod args;
pub mod commands;
pub mod emit;
pub mod suite;

use args::Cli;
use commands::CliError;

/// Runs a parsed command line; returns what goes to stdout, what goes to
/// stderr, and the exit code.
pub fn run(cli: &Cli) -> (String, String, i32) {
    let work = || commands::execute(&cli.command, &cli.global);
    let result = match cli.global.jobs {
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(CliError::usage(format!("cannot start {n} worker threads: {e}"))),
        },
        None => work(),
    };
    match result {
        Ok(out) => (out.render(cli.global.format), String::new(), 0),
        Err(e) => {
            let stdout = e.output.as_ref().map_or(String::new(), |o| o.render(cli.global.format));
            (stdout, format!("error: {}\n", e.message), e.code)
        }
    }
}
