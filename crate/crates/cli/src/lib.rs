//! Command-line driver: parses a run configuration, dispatches to the
//! `hsnum` modules and writes a manifest, a summary object and tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

pub use config::{parse_args, RunConfig, Subcommand};
pub use error::CliError;

/// Executes a resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    output::write_manifest(cfg)?;
    let report = commands::dispatch(cfg)?;
    output::emit(cfg, &report, "ok")
}

/// Parses `argv` (without the program name), runs it and returns the exit
/// status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_args(argv).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
