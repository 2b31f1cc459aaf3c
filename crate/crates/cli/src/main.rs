use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jaynes_qmp::verify::Suite;
use jaynes_qmp_cli::{cmd_analyze, cmd_evolve, cmd_fit, cmd_verify, generate_examples, CliError, Context, FitMode, Outcome};

/// Asymptotic analysis and Gibbs-state reconstruction for quantum Markov processes.
#[derive(Parser)]
#[command(name = "jaynes", version)]
struct Cli {
    /// Override a numerical tolerance, e.g. `fit=1e-9`. Repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VALUE", global = true)]
    tol_override: Vec<String>,

    /// Print a human-readable summary on standard error.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Peripheral spectrum, attractors, T-state and constants of motion.
    Analyze { file: PathBuf },
    /// Brute-force evolution next to the asymptotic formula.
    Evolve {
        file: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        times: Vec<f64>,
    },
    /// Reconstruct a Gibbs state from constraints.
    Fit {
        file: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Run the self-check suite; exits 1 if any check fails.
    Verify {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        suite: SuiteArg,
    },
    /// Write the canonical example channel files.
    Examples {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Known,
    Partial,
    Stationary,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Full,
    Fast,
}

fn run(cli: &Cli) -> Result<Option<Outcome>, CliError> {
    let ctx = Context::with_overrides(&cli.tol_override)?;
    let outcome = match &cli.command {
        Command::Analyze { file } => cmd_analyze(file, &ctx)?,
        Command::Evolve { file, state, times } => cmd_evolve(file, state, times, &ctx)?,
        Command::Fit {
            file,
            constraints,
            mode,
        } => {
            let mode = match mode {
                ModeArg::Known => FitMode::Known,
                ModeArg::Partial => FitMode::Partial,
                ModeArg::Stationary => FitMode::Stationary,
            };
            cmd_fit(file, constraints, mode, &ctx)?
        }
        Command::Verify { file, suite } => {
            let suite = match suite {
                SuiteArg::Full => Suite::Full,
                SuiteArg::Fast => Suite::Fast,
            };
            cmd_verify(file, suite, &ctx)?
        }
        Command::Examples { out } => {
            let written = generate_examples(out)?;
            if cli.verbose {
                for p in written {
                    eprintln!("wrote {}", p.display());
                }
            }
            return Ok(None);
        }
    };
    Ok(Some(outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(outcome)) => {
            print!("{}", outcome.report.to_json());
            if cli.verbose {
                eprintln!("{}", outcome.summary);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jaynes: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
