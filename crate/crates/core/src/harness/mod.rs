//! Command-line front end: sweeps, audits and artifact export.
//!
//! Every command is deterministic given its arguments. Worker count comes
//! from `COOP2MAC_THREADS` and never changes the output.

pub mod audit;
pub mod cli;
pub mod output;
pub mod sweep;

use clap::error::ErrorKind;
use clap::Parser;

pub use audit::{run_audit, AuditOptions, AuditReport, CheckResult};
pub use cli::{Cli, Command};
pub use sweep::{
    run_sweep, Interval, Sample, Sampling, SweepMode, SweepReport, SweepRow, SweepSpec,
    SweepSummary,
};

pub const THREADS_ENV: &str = "COOP2MAC_THREADS";

fn thread_count() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            )),
        },
    }
}

/// Parses `argv` (program name first), runs the command, and returns the exit status.
pub fn run_command<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let threads = match thread_count() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| cli::dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_code(&e)
        }
    }
}
