use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmfield_cli::{configure_threads, run, CliError, Command, Overrides, Scenario};

#[derive(Parser)]
#[command(
    name = "mmfield",
    version,
    about = "Multizone mode-matching experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the scenario and print derived quantities (k, N/k, lambda).
    Validate(Common),
    /// Write driving signals for the first primary direction.
    Solve(Common),
    /// Run the NRE sweep over primary directions.
    Sweep(Common),
    /// Run the binaural normalized-error comparison.
    Binaural(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    frequency: Option<f64>,
    #[arg(long)]
    lambda_factor: Option<f64>,
    #[arg(long)]
    sigma_floor: Option<f64>,
    #[arg(long)]
    speed_of_sound: Option<f64>,
}

fn execute(cli: Cli) -> Result<String, CliError> {
    configure_threads()?;
    let (command, args) = match cli.command {
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Binaural(a) => (Command::Binaural, a),
    };
    let mut scenario = Scenario::load(&args.scenario)?;
    scenario.apply(&Overrides {
        frequency_hz: args.frequency,
        lambda_factor: args.lambda_factor,
        sigma_floor: args.sigma_floor,
        speed_of_sound: args.speed_of_sound,
    });
    Ok(run(command, &scenario, args.out.as_deref())?.summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
