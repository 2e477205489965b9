//! Command-line experiment harness: run configuration, model bundles and
//! the `dwl` subcommands.

pub mod args;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command, Common};
pub use bundle::{load_bdr, load_dnet, save_bdr, save_dnet};
pub use commands::{evaluate, AriScores, EvalMetrics};
pub use config::{DataConfig, DataSource, RunConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let c = &cli.common;
    match &cli.command {
        Command::GenData(a) => commands::gen_data(c, a),
        Command::BdrFit(a) => commands::bdr_fit_cmd(c, a),
        Command::Train(a) => commands::train_cmd(c, a),
        Command::Eval(a) => commands::eval_cmd(c, a),
        Command::SweepComponents(a) => commands::sweep_cmd(c, a),
        Command::ExportFeatures(a) => commands::export_cmd(c, a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
