//! Front end for `transduce-sim`: argument handling, output files and exit codes.

pub mod args;
pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use clap::Parser;
use serde_json::{json, Value};

use transduce_core::config::load_profile;
use transduce_core::Error;

use args::{Cli, Command};
use commands::{dispatch, Context};
use output::write_json;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDITY: i32 = 3;
pub const THREADS_ENV: &str = "TRANSDUCE_SIM_THREADS";

/// Exit code for an error: 2 for configuration, 3 for physics validity, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config { .. }) => EXIT_CONFIG,
        Some(Error::Validity(_)) => EXIT_VALIDITY,
        _ => 1,
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| Error::Config {
        path: THREADS_ENV.into(),
        message: format!("`{raw}` is not a thread count"),
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parse `argv`, run the command and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match init_threads().and_then(|_| execute(cli, &argv)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli, argv: &[OsString]) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, &cli.global.out);
    }
    let g = &cli.global;
    let (file, profile) = load_profile(&g.profile, &g.overrides)?;
    let ctx = Context {
        file,
        profile,
        seed: g.seed,
        trials: g.trials,
        sequence: g.sequence.clone(),
    };
    let outcome = dispatch(&cli.command, &ctx)?;

    fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    let name = cli.command.name();
    let mut outputs = Vec::new();
    if let Some(t) = &outcome.table {
        let p = g.out.join(format!("{name}.csv"));
        t.write(&p)?;
        outputs.push(p);
    }
    let summary_path = g.out.join(format!("{name}.json"));
    write_json(&summary_path, &outcome.summary)?;
    outputs.push(summary_path);

    let profile_toml = toml::to_string(&ctx.file).context("serializing profile")?;
    let sequence_toml = match &ctx.sequence {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let manifest = json!({
        "tool": "transduce-sim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "argv": argv.iter().map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "seed": ctx.seed,
        "trials": ctx.trials.map(|_| ctx.trials()),
        "profile": serde_json::to_value(&ctx.file)?,
        "profile_toml": profile_toml,
        "sequence_toml": sequence_toml,
        "outputs": outputs.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
    });
    write_json(&g.out.join("manifest.json"), &manifest)?;

    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// Rerun a manifest's command against its recorded profile, writing into `out`.
fn replay(manifest: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let m: Value = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: manifest.display().to_string(),
        message: e.to_string(),
    })?;
    let bad = |field: &str| Error::Config {
        path: format!("{}:{field}", manifest.display()),
        message: "missing or malformed".into(),
    };
    let argv: Vec<String> = m["argv"]
        .as_array()
        .ok_or_else(|| bad("argv"))?
        .iter()
        .map(|v| v.as_str().map(str::to_owned))
        .collect::<Option<_>>()
        .ok_or_else(|| bad("argv"))?;
    let profile_toml = m["profile_toml"].as_str().ok_or_else(|| bad("profile_toml"))?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let profile_path = out.join("replay_profile.toml");
    fs::write(&profile_path, profile_toml)?;
    let sequence_path = match m["sequence_toml"].as_str() {
        Some(s) => {
            let p = out.join("replay_sequence.toml");
            fs::write(&p, s)?;
            Some(p)
        }
        None => None,
    };

    let mut cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config {
        path: format!("{}:argv", manifest.display()),
        message: e.to_string(),
    })?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(bad("command").into());
    }
    // the recorded profile already carries every override
    cli.global.profile = profile_path.display().to_string();
    cli.global.overrides.clear();
    cli.global.out = out.to_path_buf();
    cli.global.sequence = sequence_path;
    let argv: Vec<OsString> = argv.iter().map(OsString::from).collect();
    execute(cli, &argv)
}
