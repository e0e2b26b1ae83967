//! `trajent`: run scenario files and the property suites from the shell.
//!
//! Exit status: 0 success, 1 failed verification, 2 configuration error,
//! 3 numerical failure, 4 i/o failure.

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use trajent::verify::Selector;

use commands::{Experiment, Overrides};
use scenario::VariantName;

#[derive(Parser)]
#[command(
    name = "trajent",
    version,
    about = "Entropy production along quantum trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the stochastic master equation and write trajectory.csv.
    Simulate(ScenarioArgs),
    /// Enumerate the repeated-interaction model and write discrete.csv and branches.csv.
    Discrete(ScenarioArgs),
    /// Evaluate the Σ series at the initial state and write sigma.csv.
    Sigma(ScenarioArgs),
    /// Everything the scenario describes.
    Run(ScenarioArgs),
    /// Run the fixed-seed property suites.
    Verify {
        /// opalg, lindblad, entropy, paycha, trajectory, discrete or all
        #[arg(default_value = "all", value_parser = parse_selector)]
        selector: Selector,
        /// Cases per property.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Scale the Σ shell coefficient by 1.01 (the paycha suite should fail).
        #[arg(long)]
        mutate_sigma: bool,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Trajectory seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Σ variants to report.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Paper,
    Lambda,
    Both,
}

impl ScenarioArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            dt: self.dt,
            out: self.out.clone(),
            variants: self.variant.map(|v| match v {
                VariantArg::Paper => vec![VariantName::Paper],
                VariantArg::Lambda => vec![VariantName::Lambda],
                VariantArg::Both => vec![VariantName::Paper, VariantName::Lambda],
            }),
        }
    }
}

fn parse_selector(s: &str) -> Result<Selector, String> {
    s.parse().map_err(|e: trajent::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return usage_error(e),
    };
    let result = commands::configure_threads().and_then(|()| match &cli.command {
        Command::Verify {
            selector,
            seeds,
            mutate_sigma,
        } => commands::run_verify(*selector, *seeds, *mutate_sigma),
        Command::Simulate(a) => scenario_command(a, Experiment::Simulate),
        Command::Discrete(a) => scenario_command(a, Experiment::Discrete),
        Command::Sigma(a) => scenario_command(a, Experiment::Sigma),
        Command::Run(a) => scenario_command(a, Experiment::Run),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trajent: {e}");
            e.exit_code()
        }
    }
}

fn scenario_command(a: &ScenarioArgs, what: Experiment) -> Result<(), error::CliError> {
    for path in commands::run_scenario(&a.scenario, what, &a.overrides())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Clap's message followed by the usage line of the subcommand involved.
fn usage_error(e: clap::Error) -> ExitCode {
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        e.exit();
    }
    let rendered = e.render().to_string();
    eprint!("{rendered}");
    if rendered.contains("Usage:") {
        return ExitCode::from(2);
    }
    let mut cmd = Cli::command();
    cmd.build();
    let sub = std::env::args()
        .nth(1)
        .filter(|a| cmd.find_subcommand(a).is_some());
    let usage = match sub {
        Some(name) => cmd
            .find_subcommand_mut(&name)
            .expect("checked above")
            .render_usage(),
        None => cmd.render_usage(),
    };
    eprintln!("\n{usage}");
    ExitCode::from(2)
}
