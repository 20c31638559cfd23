use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use migration_cli::{cmd_calibrate, cmd_flows, cmd_simulate, cmd_validate, CalibrateArgs, FitModel, ScenarioPaths};

/// Migration flows from the Coulomb analogy and its gravity/NPV baselines.
#[derive(Parser)]
#[command(name = "migflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Inputs {
    /// Region table CSV.
    #[arg(long)]
    regions: PathBuf,
    /// Square distance matrix CSV (km); computed from coordinates when omitted.
    #[arg(long)]
    distances: Option<PathBuf>,
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
}

impl Inputs {
    fn paths(self) -> ScenarioPaths {
        ScenarioPaths {
            regions: self.regions,
            distances: self.distances,
            config: self.config,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Coulomb,
    Gravity,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario and report every violation.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Compute one flow matrix with the configured model.
    Flows {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the time-stepped simulation.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit model constants to an observed flow matrix.
    Calibrate {
        #[arg(long)]
        regions: PathBuf,
        #[arg(long)]
        distances: Option<PathBuf>,
        /// Observed flow matrix CSV, same format as flows.csv.
        #[arg(long)]
        observed: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Optional config for the charge rule, epsilon and economic distance.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { inputs } => cmd_validate(&inputs.paths()),
        Command::Flows { inputs, out } => cmd_flows(&inputs.paths(), &out),
        Command::Simulate { inputs, out } => cmd_simulate(&inputs.paths(), &out),
        Command::Calibrate {
            regions,
            distances,
            observed,
            model,
            config,
            out,
        } => cmd_calibrate(&CalibrateArgs {
            regions,
            distances,
            observed,
            model: match model {
                ModelArg::Coulomb => FitModel::Coulomb,
                ModelArg::Gravity => FitModel::Gravity,
            },
            config,
            out,
        }),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
