use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use logcount_cli::{execute, Command, HarnessError, Output};

#[derive(Debug, Parser)]
#[command(name = "logcount", version, about = "Simulation and inference for log-linear count time series")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Primary output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulate one trajectory.
    Simulate,
    /// Fit the trend exponent to a count series.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Bootstrap confidence interval for the trend exponent.
    Ci {
        #[arg(long)]
        data: PathBuf,
    },
    /// Replicated fits for box plots.
    McBoxplot,
    /// Coupling estimates of the mixing coefficients.
    Mixing,
    /// Coverage of bootstrap intervals.
    Coverage,
    /// Check the total variation bound on a grid of scales.
    TvCheck,
    /// Constants of innovation laws.
    Constants,
}

impl Cmd {
    fn split(&self) -> (Command, Option<&Path>) {
        match self {
            Cmd::Simulate => (Command::Simulate, None),
            Cmd::Fit { data } => (Command::Fit, Some(data)),
            Cmd::Ci { data } => (Command::Ci, Some(data)),
            Cmd::McBoxplot => (Command::McBoxplot, None),
            Cmd::Mixing => (Command::Mixing, None),
            Cmd::Coverage => (Command::Coverage, None),
            Cmd::TvCheck => (Command::TvCheck, None),
            Cmd::Constants => (Command::Constants, None),
        }
    }
}

fn write_outputs(out: &Output, path: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => {
            fs::write(p, &out.primary)?;
            for (suffix, bytes) in &out.sidecars {
                fs::write(p.with_extension(suffix), bytes)?;
            }
        }
        None => {
            io::stdout().write_all(&out.primary)?;
            let mut err = io::stderr();
            for (_, bytes) in &out.sidecars {
                err.write_all(bytes)?;
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let (command, data) = cli.command.split();
    let work = || execute(command, cli.config.as_deref(), cli.seed, data);
    let output = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot start {n} threads: {e}")))?
            .install(work)?,
        None => work()?,
    };
    write_outputs(&output, cli.out.as_deref())?;
    for line in &output.summary {
        eprintln!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("logcount: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
