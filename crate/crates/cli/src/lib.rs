//! Command-line front end. [`run`] parses arguments, dispatches and returns
//! the process exit status.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use commands::{exit, AppError, Outcome};

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Some(path) = config::config_path(&args) {
        match config::load(path.as_ref()) {
            Ok(entries) => match applicable(&args, entries) {
                Ok(entries) => args = config::merge(args, &entries),
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return exit::USAGE;
                }
            },
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return exit::USAGE;
            }
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok((outcome, path)) => {
            let written = match path {
                Some(p) => std::fs::write(p, &outcome.text).map_err(|e| format!("{}: {e}", p.display())),
                None => out.write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    exit::FAILED
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Config entries the chosen subcommand accepts. A key no subcommand knows is
/// an error; keys meant for other subcommands are skipped so one file can
/// serve several of them.
fn applicable(args: &[OsString], entries: Vec<(String, String)>) -> Result<Vec<(String, String)>, String> {
    let cli = Cli::command();
    let longs = |c: &clap::Command| -> Vec<String> {
        c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect()
    };
    let chosen = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find_map(|a| cli.find_subcommand(a))
        .map(longs)
        .unwrap_or_default();
    let all: Vec<String> = cli.get_subcommands().flat_map(longs).collect();
    let mut kept = Vec::new();
    for (key, value) in entries {
        if key == "config" || !all.contains(&key) {
            return Err(format!("config key `{key}` is not a flag"));
        }
        if chosen.contains(&key) {
            kept.push((key, value));
        }
    }
    Ok(kept)
}

fn dispatch(command: &Command) -> Result<(Outcome, Option<&std::path::Path>), AppError> {
    use output::Table;
    let table = |t: Table, default, out: &args::OutputArgs, code| Outcome {
        text: t.render(out.format.unwrap_or(default)),
        code,
    };
    let (outcome, out) = match command {
        Command::Mlf(a) => {
            let (t, default) = commands::mlf(a)?;
            (table(t, default, &a.out, exit::OK), &a.out)
        }
        Command::PrabhakarInt(a) => (table(commands::integral(a)?, args::Format::Table, &a.out, exit::OK), &a.out),
        Command::PrabhakarDeriv(a) => (table(commands::derivative(a)?, args::Format::Table, &a.out, exit::OK), &a.out),
        Command::LaplaceCheck(a) => {
            let (t, code) = commands::laplace(a)?;
            (table(t, args::Format::Table, &a.out, code), &a.out)
        }
        Command::GreenVerify(a) => (commands::green_verify(a)?, &a.out),
        Command::Solve(a) => (commands::solve_cmd(a)?, &a.out),
        Command::Sweep(a) => (commands::sweep(a)?, &a.out),
        Command::VerifyOps(a) => {
            let (t, code) = commands::verify_ops(a)?;
            (table(t, args::Format::Table, &a.out, code), &a.out)
        }
    };
    Ok((outcome, out.output.as_deref()))
}
