use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

mod cache;
mod cli;
mod commands;
mod render;

use cli::{Cli, Command};
use commands::Context;

/// Exit status for a failed command: 2 for bad input, 3 for solver failures.
fn failure_status(err: &anyhow::Error) -> u8 {
    use yamabe_core::Error;
    match err.downcast_ref::<Error>() {
        Some(
            Error::Domain(_)
            | Error::InvalidInput(_)
            | Error::DimensionMismatch(_)
            | Error::CoefficientPrecondition { .. },
        ) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn run(cli: &Cli) -> anyhow::Result<commands::Output> {
    let ctx = Context::new(&cli.common);
    match &cli.command {
        Command::GroundState { pair, samples } => commands::ground_state(&ctx, *pair, *samples),
        Command::Lambda { pair } => commands::lambda(&ctx, *pair),
        Command::Table {
            pairs,
            reference,
            jobs,
        } => commands::table(&ctx, pairs.as_deref(), *reference, *jobs),
        Command::ACurve { pair, lambdas } => commands::a_curve(&ctx, *pair, lambdas),
        Command::CheckStability { pair, lambda_1 } => {
            commands::check_stability(&ctx, *pair, *lambda_1)
        }
        Command::VerifyIdentities { pair } => commands::verify_identities(&ctx, *pair),
        Command::YamabeConstant { pair, vol_m } => commands::yamabe_constant(&ctx, *pair, *vol_m),
        Command::Classify {
            pair,
            lambda,
            trajectory,
            spacing,
        } => commands::classify(&ctx, *pair, *lambda, trajectory.as_deref(), *spacing),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match run(&cli) {
        Ok(output) => output,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(failure_status(&err));
        }
    };
    let written = match &cli.common.output {
        Some(path) => std::fs::write(path, &output.text),
        None => std::io::stdout().lock().write_all(output.text.as_bytes()),
    };
    if let Err(err) = written {
        eprintln!("error: writing output: {err}");
        return ExitCode::from(1);
    }
    ExitCode::from(output.status)
}
