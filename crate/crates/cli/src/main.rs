//! `netloc`: run sensor-network estimation and localization scenarios.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 runtime failure,
//! 4 violated precondition (disconnected graph, rank-deficient sensing).
//! Errors are printed to stderr as a single `netloc: <class>: <message>` line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netloc_core::sim::{self, Scenario, ScenarioKind};
use netloc_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "netloc", version, about = "Distributed target estimation and sensor localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Static target or field estimation (`kind = "static-field"`).
    Estimate(RunArgs),
    /// Distributed localization (`kind = "localization-only"`).
    Localize(RunArgs),
    /// Joint localization and field estimation (`kind = "joint"`).
    Joint(RunArgs),
    /// Moving-target tracking (`kind = "tracking"`).
    Track(RunArgs),
    /// Report connectivity, rank condition, Jacobi radius and stationary weights.
    Analyze(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `$NETLOC_OUT_ROOT/<scenario name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
    /// Root for default output directories.
    #[arg(long, env = "NETLOC_OUT_ROOT", default_value = "runs", hide_env_values = true)]
    out_root: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    class: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, class) = if e.is_config() {
            (EXIT_CONFIG, "config")
        } else if e.is_validation() {
            (EXIT_VALIDATION, "validation")
        } else {
            (EXIT_RUNTIME, "runtime")
        };
        let message = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        Failure { code, class, message }
    }
}

fn load(args: &RunArgs) -> Result<Scenario, Failure> {
    let mut s = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(r) = args.replicates {
        s.replicates = r;
    }
    s.validate()?;
    Ok(s)
}

fn out_dir(args: &RunArgs, s: &Scenario) -> PathBuf {
    args.out.clone().unwrap_or_else(|| args.out_root.join(s.name()))
}

fn expect_kind(s: &Scenario, kind: ScenarioKind, sub: &str, path: &Path) -> Result<(), Failure> {
    if s.kind != kind {
        return Err(Error::Config(format!(
            "{}: `{sub}` runs `{kind}` scenarios but the file declares `{}`",
            path.display(),
            s.kind
        ))
        .into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (args, kind, sub) = match &cli.command {
        Command::Estimate(a) => (a, Some(ScenarioKind::StaticField), "estimate"),
        Command::Localize(a) => (a, Some(ScenarioKind::LocalizationOnly), "localize"),
        Command::Joint(a) => (a, Some(ScenarioKind::Joint), "joint"),
        Command::Track(a) => (a, Some(ScenarioKind::Tracking), "track"),
        Command::Analyze(a) => (a, None, "analyze"),
    };
    let scenario = load(args)?;
    let Some(kind) = kind else {
        let report = sim::analyze(&scenario)?;
        if let Some(dir) = &args.out {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let p = dir.join("analysis.txt");
            std::fs::write(&p, report.to_string()).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        }
        if !args.quiet {
            print!("{report}");
        }
        return Ok(());
    };
    expect_kind(&scenario, kind, sub, &args.config)?;
    let dir = out_dir(args, &scenario);
    let output = sim::run_scenario_full(&scenario)?;
    sim::write_outputs(&dir, &scenario, &output)?;
    if !args.quiet {
        eprintln!("netloc: wrote {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("netloc: {}: {}", f.class, f.message);
            ExitCode::from(f.code)
        }
    }
}
