//! Command-line front end: configuration merging, subcommand dispatch and
//! CSV/JSON output.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::Parser;

use args::{Cli, Command};
use commands::RunContext;
use config::{RunConfig, Scale};

/// Merges the config file (if any) under the global flags.
pub fn resolve_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_toml_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &cli.map {
        cfg.map = Some(m.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut log = env_logger::Builder::new();
    log.filter_level(match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    });
    let _ = log.try_init();
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot start the worker pool")?;
    }

    let cfg = resolve_config(&cli)?;
    if let Command::Map(m) = &cli.command {
        return commands::map_cmd(&cfg, m);
    }
    let map = cfg.load_map()?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;
    let hash = cfg.hash(&map);
    let mut ctx = RunContext { cfg, map, scale: Scale::pick(cli.full_scale), hash };
    match &cli.command {
        Command::Bench(a) => commands::bench(&ctx, a),
        Command::Heatmap(a) => commands::heatmap_cmd(&mut ctx, a),
        Command::Rates(a) => commands::rates(&mut ctx, a),
        Command::NoiseSweep(a) => commands::noise_sweep(&ctx, a),
        Command::Trajectory(a) => commands::trajectory(&mut ctx, a),
        Command::GlobalInit(a) => commands::global_init(&mut ctx, a),
        Command::Replay(a) => commands::replay(&mut ctx, a),
        Command::Map(_) => unreachable!("handled above"),
    }
}

/// Parses `args` and runs; errors go to stderr with a nonzero exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain joined with `: `, skipping causes already spelled out by
/// the message above them.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}
