//! Command-line front end and HTTP service over a taxoforge workspace.

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub mod commands;
pub mod error;
pub mod server;
pub mod workspace;

pub use commands::{Cli, Command};
pub use error::CliError;
pub use workspace::{Workspace, WorkspaceConfig};

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on usage errors, 2 on data errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if matches!(cli.command, Command::Bootstrap { .. }) {
        std::fs::create_dir_all(&cli.global.workspace).map_err(|e| CliError::io(&cli.global.workspace, e))?;
    }
    let ws = Workspace::open(&cli.global.workspace)?;
    let mut cx = commands::Context {
        ws,
        global: cli.global,
        out,
        err,
    };
    commands::dispatch(cli.command, &mut cx)?;
    cx.out.flush()?;
    Ok(())
}
