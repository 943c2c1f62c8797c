use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lyapunov_cli::{
    cmd_equiv, cmd_frames, cmd_galapon, cmd_trace, run_checks, CliError, Fault, Report, RunConfig,
};

#[derive(Parser)]
#[command(name = "lyapunov", version, about = "Arrow-of-time operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ⟨M_F⟩, ⟨M_B⟩ and the oracle value over the time window.
    Trace(RunArgs),
    /// Position and m-space densities at the frame times.
    Frames(RunArgs),
    /// Free versus delta-potential dynamics for each coupling.
    Equiv(RunArgs),
    /// Expectation of the discrete time operator for a few levels.
    Galapon(RunArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of energy grid nodes.
    #[arg(long)]
    grid_n: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Only checks whose module starts with this, or the check of this name.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: Option<Fault>,
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = args.grid_n {
        config.n = n;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn emit(config: &RunConfig, report: Report) -> Result<(), CliError> {
    let (text, failure) = match report.into_result() {
        Ok(text) => (text, None),
        Err((text, e)) => (text, Some(e)),
    };
    match &config.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    failure.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Trace(args) => {
            let config = load(&args)?;
            emit(&config, cmd_trace(&config.resolve()?)?)
        }
        Command::Frames(args) => {
            let config = load(&args)?;
            emit(&config, cmd_frames(&config.resolve()?)?)
        }
        Command::Equiv(args) => {
            let config = load(&args)?;
            emit(&config, cmd_equiv(&config.resolve()?)?)
        }
        Command::Galapon(args) => {
            let config = load(&args)?;
            emit(&config, cmd_galapon(&config)?)
        }
        Command::Check(args) => {
            let report = run_checks(args.filter.as_deref(), args.seed, args.inject_fault)
                .map_err(CliError::Config)?;
            println!("{report}");
            let failed: Vec<&str> = report.failed().iter().map(|o| o.name).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Invariant(failed.join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lyapunov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
