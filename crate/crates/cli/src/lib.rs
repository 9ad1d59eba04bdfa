//! Command-line front end for the `qst_core` library.
//!
//! [`run`] parses a command line, dispatches the subcommand and writes the
//! report. Exit codes: 0 success, 1 validation or cross-check failure,
//! 2 usage or parse error.

pub mod channel_file;
pub mod commands;
pub mod error;
pub mod registry;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::{Cli, Command, Outcome};
use crate::error::CliError;

pub use crate::channel_file::{parse_channel_file, ChannelFile};
pub use crate::registry::registry_lookup;

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let elapsed = || start.elapsed().as_secs_f64();
    let opts = &cli.opts;
    match &cli.command {
        Command::Power => commands::power(opts, elapsed),
        Command::Canonical => commands::canonical(opts, elapsed),
        Command::Oracle { frame, bloch } => {
            commands::oracle(opts, frame.as_deref(), bloch.as_deref(), elapsed)
        }
        Command::HaarCheck => commands::haar_check(opts, elapsed),
        Command::Sweep {
            kind,
            points,
            dx,
            dy,
            dressings,
        } => commands::sweep(opts, *kind, *points, *dx, *dy, *dressings, elapsed),
    }
}

/// Runs one command line (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    if cli.opts.workers == 0 {
        let _ = writeln!(err, "error: --workers must be at least 1");
        return 2;
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.opts.workers)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(outcome) => {
            if out.write_all(outcome.text.as_bytes()).is_err() {
                return 2;
            }
            match outcome.failure {
                Some(msg) => {
                    let _ = writeln!(err, "error: {msg}");
                    1
                }
                None => 0,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
