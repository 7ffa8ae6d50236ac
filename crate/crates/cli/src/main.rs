use std::io::Write;
use std::process::ExitCode;

use backorbit_cli::args::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stdout, stderr, code) = backorbit_cli::run(&cli);
    let _ = std::io::stdout().lock().write_all(stdout.as_bytes());
    let _ = std::io::stderr().lock().write_all(stderr.as_bytes());
    ExitCode::from(code as u8)
}
