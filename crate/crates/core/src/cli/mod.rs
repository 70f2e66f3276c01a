//! Command-line front end. Each verb resolves a [`RunConfig`], runs, and
//! writes a [`Report`]. Exit status: 0 when every check passes, 2 when a
//! check misses its tolerance, 1 on usage or domain errors.

pub mod config;
pub mod invariance;
pub mod report;
pub mod verbs;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, Command};

pub use config::{RunConfig, COMMON_KEYS, SEED_ENV, VERBS};
pub use report::Report;
pub use verbs::run_verb;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

fn key_arg(k: &config::KeySpec) -> Arg {
    let mut a = Arg::new(k.name).long(k.name).value_name("VALUE").help(k.help).action(ArgAction::Set).allow_negative_numbers(true);
    if let Some(d) = k.default {
        a = a.default_value(d);
    }
    a
}

pub fn command() -> Command {
    let mut cmd = Command::new("tractor-calc")
        .about("Conformal tractor calculus on explicit model geometries")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about, keys) in VERBS {
        let mut sub = Command::new(*name).about(*about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value file; flags override it")
                .value_parser(clap::value_parser!(PathBuf)),
        );
        for k in keys.iter().chain(COMMON_KEYS) {
            sub = sub.arg(key_arg(k));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parse arguments and resolve the configuration of the chosen verb.
pub fn resolve<I, T>(args: I, env_seed: Option<String>) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = command().try_get_matches_from(args)?;
    let (verb, sub) = m.subcommand().expect("subcommand required");
    let keys = config::verb_keys(verb).expect("verb from table");
    let flags: Vec<(String, String)> = keys
        .iter()
        .chain(COMMON_KEYS)
        .filter(|k| sub.value_source(k.name) == Some(ValueSource::CommandLine))
        .filter_map(|k| sub.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect();
    let file = sub.get_one::<PathBuf>("config");
    RunConfig::resolve(verb, file.map(|p| p.as_path()), &flags, env_seed)
        .map_err(|e| command().error(clap::error::ErrorKind::ValueValidation, e.to_string()))
}

/// Run the CLI; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match resolve(args, std::env::var(SEED_ENV).ok()) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(rendered.as_bytes()) } else { stdout.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let rep = match run_verb(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    if let Err(e) = rep.emit(stdout) {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_ERROR;
    }
    if rep.pass() {
        EXIT_PASS
    } else {
        let _ = writeln!(stderr, "{:<48} {:>24} {:>24}", "check", "value", "tol");
        for c in rep.failures() {
            let _ = writeln!(stderr, "{:<48} {:>24} {:>24}", c.name, report::num(c.value), report::num(c.tol));
        }
        EXIT_TOLERANCE
    }
}
