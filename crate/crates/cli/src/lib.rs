//! `sightwalk` command line: one subcommand per pipeline stage.
//!
//! Exit status: 0 on success, 2 on a usage error (bad flag, bad config
//! file, missing required setting), 1 when the command itself fails.

use std::ffi::OsString;
use std::io::Write;

use clap::{CommandFactory, FromArgMatches};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub mod args;
mod commands;
pub mod config;

use args::{Cli, Command};
use config::{UsageError, OUT_DIR_ENV};

/// Runs with the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = Cli::from_arg_matches(&matches)
        .map_err(anyhow::Error::from)
        .and_then(|cli| {
            let (_, sub) = matches.subcommand().expect("a subcommand is required");
            dispatch(cli, sub, out, err)
        });
    match result {
        Ok(()) => 0,
        Err(e) if e.is::<UsageError>() => {
            let _ = writeln!(err, "error: {e}\n\nFor more information, try '--help'.");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli, sub: &clap::ArgMatches, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let name = cli.command.name();
    let section = match &cli.config {
        Some(path) => config::load_section(path, name)?,
        None => None,
    };
    let env_out = std::env::var(OUT_DIR_ENV).ok().filter(|v| !v.is_empty());
    fn step<T: Serialize + DeserializeOwned>(
        parsed: &T,
        sub: &clap::ArgMatches,
        name: &str,
        section: Option<&toml::Table>,
        env_out: Option<&str>,
        err: &mut dyn Write,
    ) -> anyhow::Result<T> {
        let resolved = config::resolve(parsed, sub, name, section, env_out)?;
        write!(err, "{}", config::banner(name, &resolved)?)?;
        Ok(resolved)
    }
    let (s, e) = (section.as_ref(), env_out.as_deref());
    match &cli.command {
        Command::GenData(a) => commands::gen_data(&step(a, sub, name, s, e, err)?, out),
        Command::TrainSeg(a) => commands::train_seg(&step(a, sub, name, s, e, err)?, out),
        Command::TrainNav(a) => commands::train_nav(&step(a, sub, name, s, e, err)?, out),
        Command::Eval(a) => commands::eval(&step(a, sub, name, s, e, err)?, out),
        Command::Simulate(a) => commands::simulate(&step(a, sub, name, s, e, err)?, out),
        Command::Infer(a) => commands::infer(&step(a, sub, name, s, e, err)?, out),
        Command::Serve(a) => commands::serve_cmd(&step(a, sub, name, s, e, err)?, out),
    }
}
