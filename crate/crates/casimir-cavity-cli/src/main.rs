//! `casimir-cavity`: figure data, validation and unit conversion from the
//! command line.

mod cmd;
mod output;
mod params;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

/// Environment variable that overrides `--threads`.
const THREADS_ENV: &str = "CASIMIR_CAVITY_THREADS";

#[derive(Parser)]
#[command(name = "casimir-cavity", version, about = "Casimir-Polder energies and forces in a 1+1D cavity")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
pub struct Global {
    /// Output file. A `<out>.manifest.json` is written next to it. Without
    /// it the data goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON or TOML file with default parameter values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest. `--out` may redirect it.
    #[arg(long, global = true, conflicts_with = "config")]
    pub replay: Option<PathBuf>,
    #[arg(long = "rel-tol", global = true)]
    pub rel_tol: Option<String>,
    #[arg(long = "abs-tol", global = true)]
    pub abs_tol: Option<String>,
    #[arg(long = "max-modes", global = true)]
    pub max_modes: Option<String>,
    /// Worker threads (default: all cores). CASIMIR_CAVITY_THREADS wins.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Energy shift against atom position.
    Energy(cmd::EnergyArgs),
    /// Wall or atom force against position or alpha.
    Force(cmd::ForceArgs),
    /// Many-atom wall forces, the critical atom number and pair forces.
    Medium(cmd::MediumArgs),
    /// Run the self-consistency suite and print a JSON report.
    Validate(cmd::ValidateArgs),
    /// Natural-unit values to SI.
    Convert(cmd::ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingArg {
    Bare,
    Smeared,
}

fn threads(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().map_err(|_| {
            anyhow::anyhow!("{THREADS_ENV}={v:?} is not a thread count")
        })?)),
        Err(_) => Ok(flag),
    }
}

/// Exit status for an error: 2 for bad input, 3 for numerical trouble.
fn status(e: &anyhow::Error) -> u8 {
    use casimir_cavity::Error as E;
    match e.chain().find_map(|c| c.downcast_ref::<E>()) {
        Some(E::NoConvergence { .. } | E::ImaginaryResidue { .. } | E::NoCrossing { .. }) => 3,
        _ => 2,
    }
}

/// The recorded invocation of a manifest, with its `--out` swapped for `out`.
fn replay_argv(manifest: &Path, out: Option<&Path>) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let m: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest.display()))?;
    let recorded: Vec<String> = m["argv"]
        .as_array()
        .and_then(|a| a.iter().map(|v| v.as_str().map(str::to_string)).collect())
        .ok_or_else(|| anyhow::anyhow!("{} has no argv list", manifest.display()))?;
    let mut argv = vec!["casimir-cavity".to_string()];
    let mut it = recorded.into_iter().skip(1);
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" | "--replay" => {
                it.next();
            }
            a if a.starts_with("--out=") || a.starts_with("--replay=") => {}
            _ => argv.push(arg),
        }
    }
    if let Some(out) = out {
        argv.push("--out".into());
        argv.push(out.display().to_string());
    }
    Ok(argv)
}

fn main() -> ExitCode {
    let mut argv: Vec<String> = std::env::args().collect();
    let mut cli = Cli::parse_from(&argv);
    if let Some(manifest) = cli.global.replay.clone() {
        argv = match replay_argv(&manifest, cli.global.out.as_deref()) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        };
        cli = Cli::parse_from(&argv);
    }
    let Some(command) = &cli.command else {
        Cli::command()
            .error(ErrorKind::MissingSubcommand, "a subcommand or --replay is required")
            .exit()
    };
    let run = || -> anyhow::Result<u8> {
        if let Some(n) = threads(cli.global.threads)? {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let ctx = cmd::Context::new(&cli.global)?;
        let (emit, code) = match command {
            Command::Energy(a) => cmd::energy(a, &ctx)?,
            Command::Force(a) => cmd::force(a, &ctx)?,
            Command::Medium(a) => cmd::medium(a, &ctx)?,
            Command::Validate(a) => cmd::validate(a, &ctx)?,
            Command::Convert(a) => cmd::convert(a, &ctx)?,
        };
        output::emit(emit, cli.global.out.as_deref(), &argv)?;
        Ok(code)
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(status(&e))
        }
    }
}
